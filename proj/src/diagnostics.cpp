#include "lorapre/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace lorapre {

BoundReport compute_bounds(const ShadowSeries& series, double beta1, double lambda,
                           long long d) {
    if (series.e_m.empty())
        throw ArgumentError("compute_bounds: run has no shadow-oracle series");
    if (!(lambda > 0.0)) throw ArgumentError("compute_bounds: lambda must be > 0");

    BoundReport r;
    for (double g : series.g_fro) r.G = std::max(r.G, g);
    for (double g : series.g_inf) r.G_inf = std::max(r.G_inf, g);
    for (double dlt : series.delta_subspace) r.delta = std::max(r.delta, dlt);

    const double root_b1 = std::sqrt(beta1);
    r.C_Q = r.G * r.G / (4.0 * lambda);
    r.Delta_res = (1.0 - root_b1) * r.G + root_b1 * (1.0 - root_b1) * r.delta +
                  (1.0 - root_b1) * (1.0 - root_b1) * r.C_Q;
    r.E_bound = (r.G + root_b1 * r.delta + (1.0 - root_b1) * r.C_Q) / (1.0 + root_b1);
    r.sigma_total_sq =
        std::sqrt(static_cast<double>(d)) / 4.0 * r.G_inf * r.G_inf;
    r.convergence_floor_unscaled =
        (r.E_bound + r.sigma_total_sq) * (r.E_bound + r.sigma_total_sq);

    const std::size_t n = series.e_m.size();
    const std::size_t tail_start = n - std::max<std::size_t>(1, n / 4);
    for (std::size_t t = tail_start; t < n; ++t)
        r.E_ss = std::max(r.E_ss, series.e_m[t]);

    for (std::size_t t = 0; t < n; ++t) {
        const double prev = t == 0 ? 0.0 : series.e_m[t - 1];
        if (series.e_m[t] > beta1 * prev + r.Delta_res) r.recursion_violations += 1;
        if (series.e_m[t] > beta1 * prev + series.resid_m[t] + 1e-9)
            r.recursion_violations_measured += 1;
    }
    return r;
}

BoundReport compute_bounds(const RunRecord& run, double beta1, double lambda,
                           long long d) {
    if (run.shadow.empty())
        throw ArgumentError("compute_bounds: run has no shadow-oracle series");
    return compute_bounds(run.shadow.front(), beta1, lambda, d);
}

MomentErrorReport moment_error_report(const ShadowSeries& series, double beta1,
                                      double beta2, double e_bound, long long d) {
    if (series.delta_m_eff.empty())
        throw ArgumentError("moment_error_report: run has no shadow-oracle series");
    MomentErrorReport r;
    r.delta_m = series.delta_m_eff;
    r.delta_v = series.delta_v_eff;
    r.delta_m_ceiling = beta1 * e_bound;

    double g_inf_max = 0.0;
    for (double g : series.g_inf) g_inf_max = std::max(g_inf_max, g);
    const double sigma_total_sq =
        std::sqrt(static_cast<double>(d)) / 4.0 * g_inf_max * g_inf_max;

    const std::size_t n = series.delta_m_eff.size();
    r.delta_v_ceiling.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        // identity: Delta_m at step t equals beta1 * E_{t-1} exactly
        const double e_prev = t == 0 ? 0.0 : series.e_m[t - 1];
        r.max_identity_gap =
            std::max(r.max_identity_gap, std::fabs(r.delta_m[t] - beta1 * e_prev));
        const double e_meas = t == 0 ? 0.0 : series.e_v[t - 1];
        r.delta_v_ceiling[t] = beta2 * (2.0 * g_inf_max * e_meas + sigma_total_sq);
        if (r.delta_v[t] > r.delta_v_ceiling[t]) r.delta_v_ceiling_violations += 1;
    }
    return r;
}

PopoviciuReport popoviciu_check(const ShadowSeries& series, long long d) {
    if (series.popoviciu.empty())
        throw ArgumentError("popoviciu_check: run has no shadow-oracle series");
    PopoviciuReport r;
    for (double v : series.popoviciu) r.max_observed = std::max(r.max_observed, v);
    double g_inf_max = 0.0;
    for (double g : series.g_inf) g_inf_max = std::max(g_inf_max, g);
    r.ceiling = std::sqrt(static_cast<double>(d)) / 4.0 * g_inf_max * g_inf_max;
    r.ok = r.max_observed <= r.ceiling;
    return r;
}

MemoryReport memory_report(const std::vector<ParamSpec>& specs,
                           const std::vector<Route>& routes, OptKind kind, int rank) {
    if (specs.size() != routes.size())
        throw ArgumentError("memory_report: specs/routes size mismatch");
    MemoryReport report;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const ParamSpec& p = specs[i];
        MemoryItem item;
        item.param = p.name;
        const long long pq = p.element_count();
        const long long pr =
            static_cast<long long>(p.rows() + p.cols()) * rank;
        switch (kind) {
            case OptKind::adam:
                item.slot_kind = "dense_adam";
                item.state_entries = 2 * pq;
                break;
            case OptKind::muon:
                item.slot_kind = p.is_matrix() ? "dense_muon" : "dense_adam";
                item.state_entries = p.is_matrix() ? pq : 2 * pq;
                break;
            case OptKind::lorapre_adam:
                item.slot_kind =
                    routes[i] == Route::low_rank ? "low_rank_adam" : "dense_adam";
                item.state_entries = routes[i] == Route::low_rank ? 2 * pr : 2 * pq;
                break;
            case OptKind::lorapre_muon:
                if (routes[i] == Route::low_rank) {
                    item.slot_kind = "low_rank_muon";
                    item.state_entries = pr;
                } else {
                    item.slot_kind = p.is_matrix() ? "dense_muon" : "dense_adam";
                    item.state_entries = p.is_matrix() ? pq : 2 * pq;
                }
                break;
        }
        item.dense_adam_entries = 2 * pq;
        report.total_entries += item.state_entries;
        report.total_dense_adam_entries += item.dense_adam_entries;
        report.items.push_back(std::move(item));
    }
    return report;
}

} // namespace lorapre
