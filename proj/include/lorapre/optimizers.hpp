#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lorapre/momentum.hpp"

namespace lorapre {

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::optional<double> gamma1; // default: coupled, (1-gamma1)^2 = beta1
    std::optional<double> gamma2; // default: coupled, (1-gamma2)^4 = beta2
    int rank = 4;
    double damping = 1e-8;
    double scale = 0.25;          // multiplier on the low-rank update direction
    bool eps_outside_sqrt = false; // compatibility switch: m/(sqrt(v)+eps)

    double gamma1_value() const {
        return gamma1 ? *gamma1 : coupling_from_beta(beta1, MomentOrder::first).gamma;
    }
    double gamma2_value() const {
        return gamma2 ? *gamma2 : coupling_from_beta(beta2, MomentOrder::second).gamma;
    }
};

struct MuonConfig {
    double lr = 0.01;
    double momentum = 0.95; // mu
    double weight_decay = 0.0;
    std::optional<double> gamma1; // default: coupled, 1-gamma1 = sqrt(mu)
    int rank = 4;
    double damping = 1e-8;
    int ns_iterations = 5;

    double gamma1_value() const {
        return gamma1 ? *gamma1 : 1.0 - std::sqrt(momentum);
    }
};

// ---------------------------------------------------------------------------
// Parameters and routing
// ---------------------------------------------------------------------------

struct ParamSpec {
    std::string name;
    std::vector<int> shape; // {p, q} or {n}

    bool is_matrix() const { return shape.size() == 2; }
    int rows() const { return is_matrix() ? shape[0] : 1; }
    int cols() const { return is_matrix() ? shape[1] : shape[0]; }
    long long element_count() const {
        return static_cast<long long>(rows()) * cols();
    }
};

enum class Route { low_rank, dense };

// 2-D parameters with min(p, q) > rank go low-rank; 1-D parameters and 2-D
// parameters whose smaller dimension does not exceed the rank stay dense.
std::vector<Route> param_routing(const std::vector<ParamSpec>& specs, int rank);

// ---------------------------------------------------------------------------
// Per-parameter optimizer state
// ---------------------------------------------------------------------------

enum class SlotKind { dense_adam, dense_muon, low_rank_adam, low_rank_muon };

const char* slot_kind_name(SlotKind kind);

struct OptimizerSlot {
    SlotKind kind = SlotKind::dense_adam;
    long step_count = 0;
    DenseMoment m;        // dense kinds
    DenseMoment v;        // dense_adam
    LowRankMoment m_lr;   // low-rank kinds
    LowRankMoment v_lr;   // low_rank_adam

    long long state_entries() const;
};

// ---------------------------------------------------------------------------
// Single-parameter steps. theta and slot are updated in place; one call
// advances the step counter by exactly one.
// ---------------------------------------------------------------------------

void dense_adam_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                     const AdamConfig& cfg);
void lorapre_adam_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                       const AdamConfig& cfg);
void dense_muon_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                     const MuonConfig& cfg);
void lorapre_muon_step(OptimizerSlot& slot, Matrix& theta, const Matrix& g,
                       const MuonConfig& cfg);

// ---------------------------------------------------------------------------
// Optimizer: owns one slot per parameter, routes per param_routing, seeds
// low-rank factor initializations deterministically from `seed`.
// ---------------------------------------------------------------------------

enum class OptKind { adam, muon, lorapre_adam, lorapre_muon };

const char* opt_kind_name(OptKind kind);
bool opt_kind_is_low_rank(OptKind kind);
bool opt_kind_is_adam_family(OptKind kind);

struct OptimizerSpec {
    OptKind kind = OptKind::adam;
    AdamConfig adam;
    MuonConfig muon;
    std::uint64_t seed = 0;
};

class Optimizer {
public:
    Optimizer(const OptimizerSpec& spec, const std::vector<ParamSpec>& params);

    // grads[i] must match params[i]'s shape; requires exclusive access.
    // lr_scale multiplies every configured learning rate for this step.
    void step(std::vector<Matrix>& thetas, const std::vector<Matrix>& grads,
              double lr_scale = 1.0);

    std::size_t param_count() const { return slots_.size(); }
    const OptimizerSlot& slot(std::size_t i) const { return slots_[i]; }
    const std::vector<Route>& routes() const { return routes_; }
    const std::vector<ParamSpec>& param_specs() const { return params_; }
    const OptimizerSpec& spec() const { return spec_; }
    long long total_state_entries() const;

private:
    OptimizerSpec spec_;
    std::vector<ParamSpec> params_;
    std::vector<Route> routes_;
    std::vector<OptimizerSlot> slots_;
};

} // namespace lorapre
