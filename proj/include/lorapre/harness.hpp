#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lorapre/optimizers.hpp"
#include "lorapre/problems.hpp"

namespace lorapre {

// Per-step shadow-oracle measurements for one low-rank-routed parameter.
// The dense twins (Adam m/v, magnitude EMA h, Muon momentum) consume the
// identical gradient stream produced by the low-rank run's trajectory, so
// the series measure state-tracking error, not trajectory divergence.
struct ShadowSeries {
    std::string param;
    std::vector<double> e_m;            // |m_t - B_t A_t|_F (post-update factors)
    std::vector<double> e_v;            // |h_t - vB_t vA_t|_F (magnitude history)
    std::vector<double> delta_subspace; // |g - (P_B g + g P_A)|_F (literal form)
    std::vector<double> delta_tangent;  // |(I - P_B) g (I - P_A)|_F
    std::vector<double> resid_m;        // |(m_t - m^_t) - beta1 (m_{t-1} - m^_{t-1})|_F
    std::vector<double> delta_m_eff;    // |m_t - m~_t|_F
    std::vector<double> delta_v_eff;    // |v_t - v~_t|_F
    std::vector<double> popoviciu;      // |v_t - h_t^o2|_F
    std::vector<double> g_fro;          // |g_t|_F
    std::vector<double> g_inf;          // |g_t|_inf
    std::vector<double> theta_divergence; // |theta_lowrank - theta_densetwin|_F
};

struct MemoryItem {
    std::string param;
    std::string slot_kind;
    long long state_entries;       // entries actually stored
    long long dense_adam_entries;  // 2 p q reference
};

struct MemoryReport {
    std::vector<MemoryItem> items;
    long long total_entries = 0;
    long long total_dense_adam_entries = 0;
};

struct RunRecord {
    std::vector<double> loss;      // loss at the pre-step parameters
    std::vector<double> grad_norm; // Frobenius norm over all parameters
    std::vector<double> wall_us;   // measured per-step wall clock (informational;
                                   // never serialized into deterministic outputs)
    std::vector<ShadowSeries> shadow;
    long steps = 0;
    std::uint64_t seed = 0;
    double final_loss = 0.0;       // loss after the last completed step
    bool aborted = false;
    std::string abort_reason;
    MemoryReport memory;
    std::string config_echo;
    double total_wall_us = 0.0; // informational, not part of the CSV contract
};

MemoryReport memory_report_for(const Optimizer& optimizer);

// Optional learning-rate schedule: linear warmup to the configured lr, then
// cosine decay to zero over the remaining steps. Both default off (constant
// lr), which is what the acceptance runs use.
struct LrSchedule {
    long warmup_steps = 0;
    bool cosine_decay = false;

    double multiplier(long step, long total_steps) const; // step is 1-based
};

// Runs gradient -> optimizer step -> record for `steps` steps. Aborts with a
// partial record and the aborted flag set if the loss turns non-finite.
RunRecord run_training(Problem& problem, const OptimizerSpec& spec, long steps,
                       bool shadow_oracle, const LrSchedule& schedule = {});

} // namespace lorapre
