#pragma once

#include <vector>

#include "lorapre/harness.hpp"

namespace lorapre {

// Closed-form constants and recursion checks for the reconstruction-error
// analysis, evaluated from a shadow-oracle run's own measurements.
struct BoundReport {
    double G = 0.0;       // max |g_t|_F over the run
    double G_inf = 0.0;   // max |g_t|_inf over the run
    double delta = 0.0;   // max subspace residual over the run
    double C_Q = 0.0;     // G^2 / (4 lambda)
    double Delta_res = 0.0; // (1-sqrt(b1)) G + sqrt(b1)(1-sqrt(b1)) delta + (1-sqrt(b1))^2 C_Q
    double E_bound = 0.0;   // (G + sqrt(b1) delta + (1-sqrt(b1)) C_Q) / (1 + sqrt(b1))
    double E_ss = 0.0;      // max E_t over the final quarter of the run
    double sigma_total_sq = 0.0; // sqrt(d)/4 * G_inf^2
    // (E_bound + sigma_total^2)^2: the convergence-floor factor, reported for
    // information only (its leading constant is not identifiable from a run).
    double convergence_floor_unscaled = 0.0;
    long recursion_violations = 0;          // E_t > beta1 E_{t-1} + Delta_res
    long recursion_violations_measured = 0; // E_t > beta1 E_{t-1} + |R_t|_F + 1e-9
};

// Evaluates the closed forms for one shadow series; d is the parameter's
// element count (for sigma_total_sq). Throws if the series is empty.
BoundReport compute_bounds(const ShadowSeries& series, double beta1, double lambda,
                           long long d);

// Convenience overload: first shadow series of the run.
BoundReport compute_bounds(const RunRecord& run, double beta1, double lambda,
                           long long d);

// Effective-moment error series with their ceilings. The first-moment error
// satisfies the exact identity Delta_m[t] = beta1 * E_{t-1}; the second-
// moment ceiling is beta2 (2 G_inf E_meas + sigma_total^2) per step with
// E_meas the measured magnitude-history error at t-1.
struct MomentErrorReport {
    std::vector<double> delta_m;
    std::vector<double> delta_v;
    std::vector<double> delta_v_ceiling;
    double delta_m_ceiling = 0.0;      // beta1 * E_bound
    double max_identity_gap = 0.0;     // max |Delta_m[t] - beta1 E_{t-1}|
    long delta_v_ceiling_violations = 0;
};

MomentErrorReport moment_error_report(const ShadowSeries& series, double beta1,
                                      double beta2, double e_bound, long long d);

struct PopoviciuReport {
    double max_observed = 0.0; // max |v_t - h_t^o2|_F
    double ceiling = 0.0;      // sqrt(d)/4 * G_inf^2
    bool ok = false;
};

PopoviciuReport popoviciu_check(const ShadowSeries& series, long long d);

// Expected optimizer-state entry counts from routing alone, in exact integer
// arithmetic: 2(p+q)r for low-rank Adam vs 2pq dense Adam, (p+q)r vs pq for
// the Muon kinds, 2n for 1-D dense parameters.
MemoryReport memory_report(const std::vector<ParamSpec>& specs,
                           const std::vector<Route>& routes, OptKind kind, int rank);

} // namespace lorapre
