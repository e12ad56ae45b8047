#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lorapre/diagnostics.hpp"
#include "lorapre/momentum.hpp"
#include "lorapre/problems.hpp"
#include "lorapre/rng.hpp"

using namespace lorapre;

namespace {

ShadowSeries minimal_series(double g, double delta) {
    ShadowSeries s;
    s.g_fro = {g};
    s.g_inf = {g};
    s.delta_subspace = {delta};
    s.e_m = {0.0};
    s.e_v = {0.0};
    s.resid_m = {0.0};
    s.delta_m_eff = {0.0};
    s.delta_v_eff = {0.0};
    s.popoviciu = {0.0};
    return s;
}

// Alternating gradient stream: zero then an all-constant matrix.
class AlternatingProblem final : public Problem {
public:
    AlternatingProblem(int p, int q, double level)
        : level_(p, q), specs_{ParamSpec{"theta", {p, q}}} {
        for (std::size_t i = 0; i < level_.size(); ++i) level_.data()[i] = level;
    }
    const std::vector<ParamSpec>& param_specs() const override { return specs_; }
    std::vector<Matrix> initial_params() const override {
        return {Matrix(level_.rows(), level_.cols())};
    }
    double loss(const std::vector<Matrix>&) const override { return 1.0; }
    std::vector<Matrix> grads(const std::vector<Matrix>&, long step) const override {
        return {step % 2 == 0 ? Matrix(level_.rows(), level_.cols()) : level_};
    }

private:
    Matrix level_;
    std::vector<ParamSpec> specs_;
};

} // namespace

TEST_CASE("compute_bounds: negligible C_Q and delta reduce to G/(1+sqrt(beta1))") {
    // lambda large relative to G makes C_Q vanish
    const BoundReport r = compute_bounds(minimal_series(1.0, 0.0), 0.9, 1e12, 16);
    CHECK(r.E_bound == doctest::Approx(0.51317).epsilon(1e-4));
    CHECK(r.C_Q == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("compute_bounds: beta1 = 0 collapses to G + C_Q") {
    const BoundReport r = compute_bounds(minimal_series(2.0, 0.7), 0.0, 1.0, 16);
    CHECK(r.E_bound == doctest::Approx(2.0 + r.C_Q).epsilon(1e-12));
    CHECK(r.C_Q == doctest::Approx(1.0).epsilon(1e-12)); // 4/(4*1)
}

TEST_CASE("compute_bounds: E_bound equals Delta_res/(1-beta1) after cancellation") {
    Rng rng(60);
    for (int i = 0; i < 100; ++i) {
        const double beta1 = 0.98 * rng.uniform();
        const double g = 0.1 + 5.0 * rng.uniform();
        const double delta = 5.0 * rng.uniform();
        const double lambda = std::pow(10.0, -6.0 + 6.0 * rng.uniform());
        const BoundReport r = compute_bounds(minimal_series(g, delta), beta1, lambda, 8);
        CHECK(r.E_bound ==
              doctest::Approx(r.Delta_res / (1.0 - beta1)).epsilon(1e-12));
    }
}

TEST_CASE("compute_bounds: closed forms are pure functions of the inputs") {
    const ShadowSeries s = minimal_series(1.5, 0.2);
    const BoundReport a = compute_bounds(s, 0.9, 1e-4, 32);
    const BoundReport b = compute_bounds(s, 0.9, 1e-4, 32);
    CHECK(a.C_Q == b.C_Q);
    CHECK(a.Delta_res == b.Delta_res);
    CHECK(a.E_bound == b.E_bound);
    CHECK(a.sigma_total_sq == b.sigma_total_sq);
}

TEST_CASE("compute_bounds: sensing shadow run satisfies every inequality") {
    auto problem = low_rank_sensing_problem(16, 12, 2, 0.0, 61);
    OptimizerSpec spec;
    spec.kind = OptKind::lorapre_adam;
    spec.adam.lr = 0.02;
    spec.adam.rank = 2;
    spec.seed = 61;
    const RunRecord run = run_training(*problem, spec, 400, true);
    const BoundReport r = compute_bounds(run, spec.adam.beta1, spec.adam.damping,
                                         16ll * 12ll);
    CHECK(r.recursion_violations == 0);
    CHECK(r.recursion_violations_measured == 0);
    CHECK(r.E_ss <= r.E_bound);
    CHECK(r.G > 0.0);
    CHECK(r.G_inf > 0.0);
    CHECK(r.G_inf <= r.G);
}

TEST_CASE("compute_bounds: missing oracle series raises an argument error") {
    RunRecord empty;
    CHECK_THROWS_AS(compute_bounds(empty, 0.9, 1e-8, 4), ArgumentError);
}

TEST_CASE("moment_error_report: zero history start and exact identity") {
    auto problem = low_rank_sensing_problem(12, 10, 2, 0.0, 62);
    OptimizerSpec spec;
    spec.kind = OptKind::lorapre_adam;
    spec.adam.lr = 0.02;
    spec.adam.rank = 2;
    spec.seed = 62;
    const RunRecord run = run_training(*problem, spec, 300, true);
    const BoundReport bounds =
        compute_bounds(run, spec.adam.beta1, spec.adam.damping, 120);
    const MomentErrorReport rep = moment_error_report(
        run.shadow[0], spec.adam.beta1, spec.adam.beta2, bounds.E_bound, 120);
    CHECK(rep.delta_m[0] == 0.0); // both histories are zero at step 1
    CHECK(rep.delta_v[0] == 0.0);
    CHECK(rep.max_identity_gap <= 1e-12);
    CHECK(rep.delta_v_ceiling_violations == 0);
    CHECK(rep.delta_m_ceiling == doctest::Approx(spec.adam.beta1 * bounds.E_bound));
}

TEST_CASE("popoviciu_check: converged constant stream has tiny variance gap") {
    // constant |g|: v -> g^2 and h -> |g|, so v - h^2 -> 0 within the bound
    auto problem = quadratic_problem(8, 6, 1.0, 63);
    OptimizerSpec spec;
    spec.kind = OptKind::lorapre_adam;
    spec.adam.lr = 1e-9; // hold theta still so the gradient is near-constant
    spec.adam.rank = 2;
    spec.seed = 63;
    const RunRecord run = run_training(*problem, spec, 400, true);
    const PopoviciuReport rep = popoviciu_check(run.shadow[0], 48);
    CHECK(rep.ok);
    // steady state: the observed gap collapsed well below the ceiling
    CHECK(run.shadow[0].popoviciu.back() < 0.05 * rep.ceiling);
}

TEST_CASE("popoviciu_check: two-level alternating stream stays within the ceiling") {
    AlternatingProblem problem(6, 4, 2.0);
    OptimizerSpec spec;
    spec.kind = OptKind::lorapre_adam;
    spec.adam.lr = 1e-9;
    spec.adam.rank = 2;
    spec.seed = 64;
    const RunRecord run = run_training(problem, spec, 200, true);
    const PopoviciuReport rep = popoviciu_check(run.shadow[0], 24);
    CHECK(rep.ok);
    CHECK(rep.max_observed > 0.0);
    CHECK(rep.ceiling == doctest::Approx(std::sqrt(24.0) / 4.0 * 4.0));
}

TEST_CASE("popoviciu: scalar stream bounded by one quarter") {
    // d = 1 textbook case, values in [0, 1]: EMA variance can never top 1/4
    Rng rng(65);
    DenseMoment v{Matrix(1, 1)}, h{Matrix(1, 1)};
    double worst = 0.0;
    for (int t = 0; t < 2000; ++t) {
        Matrix g(1, 1);
        g(0, 0) = rng.uniform();
        v = dense_ema_update(v, g, 0.95, true);
        h = dense_ema_update(h, g, 0.95, false);
        worst = std::max(worst, v.value(0, 0) - h.value(0, 0) * h.value(0, 0));
    }
    CHECK(worst <= 0.25);
    CHECK(worst >= 0.0);
}

TEST_CASE("memory_report: quoted shape/rank pair and break-even rank") {
    const std::vector<ParamSpec> specs = {ParamSpec{"w", {512, 512}}};
    const std::vector<Route> routes = {Route::low_rank};
    const MemoryReport rep = memory_report(specs, routes, OptKind::lorapre_adam, 128);
    CHECK(rep.items[0].state_entries == 262144);
    CHECK(rep.items[0].dense_adam_entries == 524288);
    CHECK(2.0 * rep.items[0].state_entries == rep.items[0].dense_adam_entries);

    // r = pq/(p+q): p = q = 8, r = 4 -> identical footprints
    const std::vector<ParamSpec> even = {ParamSpec{"w", {8, 8}}};
    const MemoryReport rep_even =
        memory_report(even, {Route::low_rank}, OptKind::lorapre_adam, 4);
    CHECK(rep_even.items[0].state_entries == rep_even.items[0].dense_adam_entries);

    // 1-D parameter under Adam stores 2n entries
    const std::vector<ParamSpec> vec = {ParamSpec{"b", {64}}};
    const MemoryReport rep_vec = memory_report(vec, {Route::dense}, OptKind::adam, 8);
    CHECK(rep_vec.items[0].state_entries == 128);
}

TEST_CASE("memory_report: muon kinds store one moment") {
    const std::vector<ParamSpec> specs = {ParamSpec{"w", {16, 12}}};
    const MemoryReport dense =
        memory_report(specs, {Route::dense}, OptKind::muon, 4);
    CHECK(dense.items[0].state_entries == 16 * 12);
    const MemoryReport low =
        memory_report(specs, {Route::low_rank}, OptKind::lorapre_muon, 4);
    CHECK(low.items[0].state_entries == (16 + 12) * 4);
}
