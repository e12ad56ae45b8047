#pragma once

#include <cstdint>

#include "lorapre/linalg.hpp"
#include "lorapre/matrix.hpp"

namespace lorapre {

// ---------------------------------------------------------------------------
// Momentum as an online low-rank linear regressor. A full p x q moment is
// replaced by a factor pair (B: p x r, A: r x q) whose product reconstructs
// it; factors advance by damped Newton-step closed forms so the reconstruction
// follows the same EMA decay as the dense moment it replaces.
// ---------------------------------------------------------------------------

struct LowRankMoment {
    Matrix b;             // p x r
    Matrix a;             // r x q
    double damping = 0.0; // Tikhonov lambda > 0 for the factor pseudo-inverses

    int rows() const { return b.rows(); }
    int cols() const { return a.cols(); }
    int rank() const { return b.cols(); }
    // stored optimizer-state entries: (p + q) * r
    long long state_entries() const {
        return static_cast<long long>(rows() + cols()) * rank();
    }
};

enum class MomentOrder { first, second };

// Decay-rate coupling: (1-gamma)^2 = beta for first moments, (1-gamma)^4 =
// beta for second moments (the reconstruction is squared once more).
struct Coupling {
    double beta;
    double gamma;
};

Coupling coupling_from_beta(double beta, MomentOrder order);

// B = 0, A ~ N(0, 0.02) i.i.d. from the seeded generator.
LowRankMoment init_low_rank(int p, int q, int r, double lambda, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Regression view: L(B, A; g) = 1/2 |BA - g|_F^2, plus the momentum-shifted
// variant L - mu/(1-mu) <BA, g>_F used by the Muon factor updates.
// ---------------------------------------------------------------------------

struct FactorGrads {
    Matrix b; // dL/dB = (BA - g) A^T          (minus the Muon shift term)
    Matrix a; // dL/dA = B^T (BA - g)
};

double regression_loss(const LowRankMoment& state, const Matrix& g);
FactorGrads regression_grads(const LowRankMoment& state, const Matrix& g);
double muon_regression_loss(const LowRankMoment& state, const Matrix& g, double mu);
FactorGrads muon_regression_grads(const LowRankMoment& state, const Matrix& g, double mu);

// Newton directions d_B = B - s g A^+, d_A = A - s B^+ g with s = 1/(1-mu);
// the factor updates are x <- x - gamma d_x.
FactorGrads newton_directions(const LowRankMoment& state, const Matrix& g, double mu = 0.0);

// ---------------------------------------------------------------------------
// Factor updates. Both new factors are computed from the pre-update (old)
// factors and applied simultaneously.
// ---------------------------------------------------------------------------

LowRankMoment first_moment_update(const LowRankMoment& state, const Matrix& g, double gamma1);
LowRankMoment second_moment_update(const LowRankMoment& state, const Matrix& g, double gamma2);
LowRankMoment muon_moment_update(const LowRankMoment& state, const Matrix& g, double mu,
                                 double gamma1);

Matrix reconstruct(const LowRankMoment& state); // B * A

// Effective moments for the parameter update: blend of the pre-update
// reconstruction with the exact current gradient.
Matrix effective_first_moment(const LowRankMoment& state, const Matrix& g, double beta1);
Matrix effective_second_moment(const LowRankMoment& state, const Matrix& g, double beta2);

// Dense EMA (the oracle the low-rank reconstructions are measured against).
struct DenseMoment {
    Matrix value;
};

DenseMoment dense_ema_update(const DenseMoment& state, const Matrix& g, double beta,
                             bool squared);

// Damped approximate projections: P_A = A^+ A (row space, q x q) and
// P_B = B B^+ (column space, p x p).
Matrix projection_row(const LowRankMoment& state);
Matrix projection_col(const LowRankMoment& state);

} // namespace lorapre
