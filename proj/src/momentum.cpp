#include "lorapre/momentum.hpp"

#include <cmath>
#include <string>

#include "lorapre/rng.hpp"

namespace lorapre {

Coupling coupling_from_beta(double beta, MomentOrder order) {
    if (!(beta >= 0.0) || !(beta < 1.0))
        throw ArgumentError("coupling_from_beta: beta must be in [0, 1), got " +
                            std::to_string(beta));
    const double gamma = (order == MomentOrder::first)
                             ? 1.0 - std::sqrt(beta)
                             : 1.0 - std::pow(beta, 0.25);
    return Coupling{beta, gamma};
}

LowRankMoment init_low_rank(int p, int q, int r, double lambda, std::uint64_t seed) {
    if (r <= 0 || r > std::min(p, q))
        throw ArgumentError("init_low_rank: rank " + std::to_string(r) +
                            " must be in [1, min(p, q)] for shape " +
                            std::to_string(p) + "x" + std::to_string(q));
    if (!(lambda > 0.0))
        throw ArgumentError("init_low_rank: damping must be > 0");
    LowRankMoment state{Matrix(p, r), Matrix(r, q), lambda};
    Rng rng(seed);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < q; ++j) state.a(i, j) = rng.normal(0.0, 0.02);
    return state;
}

double regression_loss(const LowRankMoment& state, const Matrix& g) {
    const Matrix residual = add_scaled(1.0, reconstruct(state), -1.0, g);
    const double f = frobenius_norm(residual);
    return 0.5 * f * f;
}

FactorGrads regression_grads(const LowRankMoment& state, const Matrix& g) {
    const Matrix residual = add_scaled(1.0, reconstruct(state), -1.0, g);
    return FactorGrads{matmul(residual, transpose(state.a)),
                       matmul(transpose(state.b), residual)};
}

double muon_regression_loss(const LowRankMoment& state, const Matrix& g, double mu) {
    if (!(mu >= 0.0) || !(mu < 1.0))
        throw ArgumentError("muon_regression_loss: mu must be in [0, 1)");
    const Matrix rec = reconstruct(state);
    const Matrix residual = add_scaled(1.0, rec, -1.0, g);
    const double f = frobenius_norm(residual);
    return 0.5 * f * f - mu / (1.0 - mu) * frobenius_dot(rec, g);
}

FactorGrads muon_regression_grads(const LowRankMoment& state, const Matrix& g, double mu) {
    if (!(mu >= 0.0) || !(mu < 1.0))
        throw ArgumentError("muon_regression_grads: mu must be in [0, 1)");
    const Matrix residual = add_scaled(1.0, reconstruct(state), -1.0, g);
    const double shift = mu / (1.0 - mu);
    const Matrix gb = add_scaled(1.0, matmul(residual, transpose(state.a)), -shift,
                                 matmul(g, transpose(state.a)));
    const Matrix ga = add_scaled(1.0, matmul(transpose(state.b), residual), -shift,
                                 matmul(transpose(state.b), g));
    return FactorGrads{gb, ga};
}

FactorGrads newton_directions(const LowRankMoment& state, const Matrix& g, double mu) {
    if (!(mu >= 0.0) || !(mu < 1.0))
        throw ArgumentError("newton_directions: mu must be in [0, 1)");
    const double s = 1.0 / (1.0 - mu);
    const Matrix a_pinv = damped_right_pinv(state.a, state.damping);
    const Matrix b_pinv = damped_left_pinv(state.b, state.damping);
    return FactorGrads{add_scaled(1.0, state.b, -s, matmul(g, a_pinv)),
                       add_scaled(1.0, state.a, -s, matmul(b_pinv, g))};
}

namespace {

// Shared body of the three factor updates: both injections are built from
// the old factors, then applied together.
//   B <- (1-gamma) B + inject * g A^+
//   A <- (1-gamma) A + inject * B^+ g
LowRankMoment simultaneous_update(const LowRankMoment& state, const Matrix& g,
                                  double gamma, double inject, const char* who) {
    if (g.rows() != state.rows() || g.cols() != state.cols())
        throw ShapeError(std::string(who) + ": gradient shape " + g.shape_string() +
                         " does not match state " + std::to_string(state.rows()) +
                         "x" + std::to_string(state.cols()));
    const Matrix a_pinv = damped_right_pinv(state.a, state.damping); // q x r
    const Matrix b_pinv = damped_left_pinv(state.b, state.damping);  // r x p
    LowRankMoment next{
        add_scaled(1.0 - gamma, state.b, inject, matmul(g, a_pinv)),
        add_scaled(1.0 - gamma, state.a, inject, matmul(b_pinv, g)),
        state.damping};
    if (!next.b.is_finite())
        throw NumericError(std::string(who) + ": non-finite B factor");
    if (!next.a.is_finite())
        throw NumericError(std::string(who) + ": non-finite A factor");
    return next;
}

void require_rate(double gamma, const char* who) {
    if (!(gamma > 0.0) || !(gamma <= 1.0))
        throw ArgumentError(std::string(who) + ": rate must be in (0, 1], got " +
                            std::to_string(gamma));
}

} // namespace

LowRankMoment first_moment_update(const LowRankMoment& state, const Matrix& g,
                                  double gamma1) {
    require_rate(gamma1, "first_moment_update");
    return simultaneous_update(state, g, gamma1, gamma1, "first_moment_update");
}

LowRankMoment second_moment_update(const LowRankMoment& state, const Matrix& g,
                                   double gamma2) {
    require_rate(gamma2, "second_moment_update");
    return simultaneous_update(state, abs_elementwise(g), gamma2, gamma2,
                               "second_moment_update");
}

LowRankMoment muon_moment_update(const LowRankMoment& state, const Matrix& g, double mu,
                                 double gamma1) {
    require_rate(gamma1, "muon_moment_update");
    if (!(mu >= 0.0) || !(mu < 1.0))
        throw ArgumentError("muon_moment_update: mu must be in [0, 1)");
    return simultaneous_update(state, g, gamma1, gamma1 / (1.0 - mu),
                               "muon_moment_update");
}

Matrix reconstruct(const LowRankMoment& state) { return matmul(state.b, state.a); }

Matrix effective_first_moment(const LowRankMoment& state, const Matrix& g, double beta1) {
    if (g.rows() != state.rows() || g.cols() != state.cols())
        throw ShapeError("effective_first_moment: shape mismatch");
    return add_scaled(beta1, reconstruct(state), 1.0 - beta1, g);
}

Matrix effective_second_moment(const LowRankMoment& state, const Matrix& g, double beta2) {
    if (g.rows() != state.rows() || g.cols() != state.cols())
        throw ShapeError("effective_second_moment: shape mismatch");
    return add_scaled(beta2, hadamard_square(reconstruct(state)), 1.0 - beta2,
                      hadamard_square(g));
}

DenseMoment dense_ema_update(const DenseMoment& state, const Matrix& g, double beta,
                             bool squared) {
    require_same_shape(state.value, g, "dense_ema_update");
    const Matrix update = squared ? hadamard_square(g) : g;
    return DenseMoment{add_scaled(beta, state.value, 1.0 - beta, update)};
}

Matrix projection_row(const LowRankMoment& state) {
    return matmul(damped_right_pinv(state.a, state.damping), state.a);
}

Matrix projection_col(const LowRankMoment& state) {
    return matmul(state.b, damped_left_pinv(state.b, state.damping));
}

} // namespace lorapre
