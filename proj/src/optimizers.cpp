#include "lorapre/optimizers.hpp"

#include <algorithm>
#include <cmath>

#include "lorapre/rng.hpp"

namespace lorapre {

const char* slot_kind_name(SlotKind kind) {
    switch (kind) {
        case SlotKind::dense_adam: return "dense_adam";
        case SlotKind::dense_muon: return "dense_muon";
        case SlotKind::low_rank_adam: return "low_rank_adam";
        case SlotKind::low_rank_muon: return "low_rank_muon";
    }
    return "?";
}

const char* opt_kind_name(OptKind kind) {
    switch (kind) {
        case OptKind::adam: return "adam";
        case OptKind::muon: return "muon";
        case OptKind::lorapre_adam: return "lorapre_adam";
        case OptKind::lorapre_muon: return "lorapre_muon";
    }
    return "?";
}

bool opt_kind_is_low_rank(OptKind kind) {
    return kind == OptKind::lorapre_adam || kind == OptKind::lorapre_muon;
}

bool opt_kind_is_adam_family(OptKind kind) {
    return kind == OptKind::adam || kind == OptKind::lorapre_adam;
}

std::vector<Route> param_routing(const std::vector<ParamSpec>& specs, int rank) {
    std::vector<Route> routes;
    routes.reserve(specs.size());
    for (const auto& p : specs) {
        const bool low_rank =
            p.is_matrix() && std::min(p.shape[0], p.shape[1]) > rank;
        routes.push_back(low_rank ? Route::low_rank : Route::dense);
    }
    return routes;
}

long long OptimizerSlot::state_entries() const {
    switch (kind) {
        case SlotKind::dense_adam:
            return 2ll * static_cast<long long>(m.value.size());
        case SlotKind::dense_muon:
            return static_cast<long long>(m.value.size());
        case SlotKind::low_rank_adam:
            return m_lr.state_entries() + v_lr.state_entries();
        case SlotKind::low_rank_muon:
            return m_lr.state_entries();
    }
    return 0;
}

namespace {

// theta <- theta - lr * (scale * direction + weight_decay * theta)
void apply_update(Matrix& theta, const Matrix& direction, double lr, double scale,
                  double weight_decay, const char* who) {
    require_same_shape(theta, direction, who);
    double* t = theta.data();
    const double* d = direction.data();
    for (std::size_t i = 0; i < theta.size(); ++i)
        t[i] -= lr * (scale * d[i] + weight_decay * t[i]);
    require_finite(theta, who);
}

// m_hat / sqrt(v_hat + eps), or m_hat / (sqrt(v_hat) + eps) in the
// compatibility placement. Bias correction uses the post-increment t.
Matrix adam_direction(const Matrix& m, const Matrix& v, long t, const AdamConfig& cfg,
                      const char* who) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    Matrix dir(m.rows(), m.cols());
    const double* pm = m.data();
    const double* pv = v.data();
    double* pd = dir.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double m_hat = pm[i] / bc1;
        const double v_hat = pv[i] / bc2;
        const double denom = cfg.eps_outside_sqrt ? std::sqrt(v_hat) + cfg.eps
                                                  : std::sqrt(v_hat + cfg.eps);
        pd[i] = m_hat / denom;
    }
    require_finite(dir, who);
    return dir;
}

} // namespace

void dense_adam_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                     const AdamConfig& cfg) {
    require_same_shape(theta, g, "dense_adam_step");
    slot.m = dense_ema_update(slot.m, g, cfg.beta1, false);
    slot.v = dense_ema_update(slot.v, g, cfg.beta2, true);
    slot.step_count += 1;
    const Matrix dir = adam_direction(slot.m.value, slot.v.value, slot.step_count, cfg,
                                      "dense_adam_step");
    apply_update(theta, dir, cfg.lr, 1.0, cfg.weight_decay, "dense_adam_step");
}

void lorapre_adam_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                       const AdamConfig& cfg) {
    require_same_shape(theta, g, "lorapre_adam_step");
    // Effective moments from the pre-update factors, then the factor updates
    // (first moment on g, second on |g|), then the shared update line.
    const Matrix m_eff = effective_first_moment(slot.m_lr, g, cfg.beta1);
    const Matrix v_eff = effective_second_moment(slot.v_lr, g, cfg.beta2);
    slot.m_lr = first_moment_update(slot.m_lr, g, cfg.gamma1_value());
    slot.v_lr = second_moment_update(slot.v_lr, g, cfg.gamma2_value());
    slot.step_count += 1;
    const Matrix dir =
        adam_direction(m_eff, v_eff, slot.step_count, cfg, "lorapre_adam_step");
    apply_update(theta, dir, cfg.lr, cfg.scale, cfg.weight_decay, "lorapre_adam_step");
}

void dense_muon_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                     const MuonConfig& cfg) {
    require_same_shape(theta, g, "dense_muon_step");
    // m <- mu * m + g (not (1-mu)-normalized), O <- NewtonSchulz5(m).
    slot.m.value = add_scaled(cfg.momentum, slot.m.value, 1.0, g);
    slot.step_count += 1;
    const Matrix ortho = newton_schulz5(slot.m.value, cfg.ns_iterations);
    apply_update(theta, ortho, cfg.lr, 1.0, cfg.weight_decay, "dense_muon_step");
}

void lorapre_muon_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                       const MuonConfig& cfg) {
    require_same_shape(theta, g, "lorapre_muon_step");
    const Matrix m_eff =
        add_scaled(cfg.momentum, reconstruct(slot.m_lr), 1.0, g);
    slot.m_lr = muon_moment_update(slot.m_lr, g, cfg.momentum, cfg.gamma1_value());
    slot.step_count += 1;
    const Matrix ortho = newton_schulz5(m_eff, cfg.ns_iterations);
    apply_update(theta, ortho, cfg.lr, 1.0, cfg.weight_decay, "lorapre_muon_step");
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

Optimizer::Optimizer(const OptimizerSpec& spec, const std::vector<ParamSpec>& params)
    : spec_(spec), params_(params) {
    const int rank = opt_kind_is_adam_family(spec.kind) ? spec.adam.rank : spec.muon.rank;
    routes_ = opt_kind_is_low_rank(spec.kind)
                  ? param_routing(params_, rank)
                  : std::vector<Route>(params_.size(), Route::dense);
    slots_.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const ParamSpec& p = params_[i];
        OptimizerSlot slot;
        const int rows = p.rows(), cols = p.cols();
        if (routes_[i] == Route::low_rank) {
            const double damping = opt_kind_is_adam_family(spec.kind)
                                       ? spec.adam.damping
                                       : spec.muon.damping;
            slot.kind = spec.kind == OptKind::lorapre_adam ? SlotKind::low_rank_adam
                                                           : SlotKind::low_rank_muon;
            slot.m_lr = init_low_rank(rows, cols, rank, damping,
                                      Rng::derive(spec.seed, 2 * i));
            if (slot.kind == SlotKind::low_rank_adam)
                slot.v_lr = init_low_rank(rows, cols, rank, damping,
                                          Rng::derive(spec.seed, 2 * i + 1));
        } else {
            // Muon is defined for matrices; 1-D parameters fall back to
            // dense Adam even under the Muon kinds.
            const bool muon_family = !opt_kind_is_adam_family(spec.kind);
            slot.kind = (muon_family && p.is_matrix()) ? SlotKind::dense_muon
                                                       : SlotKind::dense_adam;
            slot.m = DenseMoment{Matrix(rows, cols)};
            if (slot.kind == SlotKind::dense_adam)
                slot.v = DenseMoment{Matrix(rows, cols)};
        }
        slots_.push_back(std::move(slot));
    }
}

void Optimizer::step(std::vector<Matrix>& thetas, const std::vector<Matrix>& grads,
                     double lr_scale) {
    if (thetas.size() != slots_.size() || grads.size() != slots_.size())
        throw ShapeError("Optimizer::step: parameter/gradient count mismatch");
    AdamConfig adam = spec_.adam;
    if (!opt_kind_is_adam_family(spec_.kind)) {
        // dense-Adam fallback under Muon kinds: Muon lr/decay, default moments
        adam = AdamConfig{};
        adam.lr = spec_.muon.lr;
        adam.weight_decay = spec_.muon.weight_decay;
    }
    adam.lr *= lr_scale;
    AdamConfig low_rank_adam = spec_.adam;
    low_rank_adam.lr *= lr_scale;
    MuonConfig muon = spec_.muon;
    muon.lr *= lr_scale;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        switch (slots_[i].kind) {
            case SlotKind::dense_adam:
                dense_adam_step(slots_[i], thetas[i], grads[i], adam);
                break;
            case SlotKind::dense_muon:
                dense_muon_step(slots_[i], thetas[i], grads[i], muon);
                break;
            case SlotKind::low_rank_adam:
                lorapre_adam_step(slots_[i], thetas[i], grads[i], low_rank_adam);
                break;
            case SlotKind::low_rank_muon:
                lorapre_muon_step(slots_[i], thetas[i], grads[i], muon);
                break;
        }
    }
}

long long Optimizer::total_state_entries() const {
    long long total = 0;
    for (const auto& s : slots_) total += s.state_entries();
    return total;
}

} // namespace lorapre
