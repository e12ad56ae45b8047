// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
// Every tolerance is pinned in code; reference-derived thresholds are noted
// where they apply.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lorapre/diagnostics.hpp"
#include "lorapre/harness.hpp"
#include "lorapre/momentum.hpp"
#include "lorapre/optimizers.hpp"
#include "lorapre/problems.hpp"
#include "lorapre/report.hpp"
#include "lorapre/rng.hpp"
#include "oracles.hpp"

using namespace lorapre;
using oracles::random_matrix;

namespace {

struct Acceptance {
    int failures = 0;
    int total = 0;

    void criterion(int number, const std::string& title,
                   const std::function<std::string()>& body) {
        ++total;
        std::string detail;
        bool pass = false;
        try {
            detail = body();
            pass = detail.empty();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", number,
                    title.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
        if (!pass) ++failures;
    }
};

std::string fail_if(bool bad, const std::string& msg) { return bad ? msg : ""; }

LowRankMoment random_state(Rng& rng, int p, int q, int r, double damping) {
    return LowRankMoment{random_matrix(rng, p, r), random_matrix(rng, r, q), damping};
}

double rel_diff(const Matrix& got, const Matrix& want) {
    return frobenius_norm(add_scaled(1.0, got, -1.0, want)) /
           std::max(frobenius_norm(want), 1e-300);
}

OptimizerSpec adam_spec(OptKind kind, double lr, int rank, std::uint64_t seed,
                        double scale) {
    OptimizerSpec spec;
    spec.kind = kind;
    spec.adam.lr = lr;
    spec.adam.rank = rank;
    spec.adam.scale = scale;
    spec.seed = seed;
    return spec;
}

} // namespace

int main() {
    Acceptance acc;

    // ------------------------------------------------------------------
    acc.criterion(1, "zero-gradient decay identities (beta1, beta2, mu)", [] {
        Rng rng(201);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const Matrix zero(8, 6);
            const double beta1 = 0.5 + 0.49 * rng.uniform();
            const double beta2 = 0.5 + 0.49 * rng.uniform();
            const double mu = 0.5 + 0.49 * rng.uniform();

            const LowRankMoment s1 = random_state(rng, 8, 6, 2, 1e-8);
            const Matrix m_after = reconstruct(first_moment_update(
                s1, zero, coupling_from_beta(beta1, MomentOrder::first).gamma));
            worst = std::max(worst, rel_diff(m_after, scale(reconstruct(s1), beta1)));

            const LowRankMoment s2 = random_state(rng, 8, 6, 2, 1e-8);
            const Matrix h_after = reconstruct(second_moment_update(
                s2, zero, coupling_from_beta(beta2, MomentOrder::second).gamma));
            // h scales by sqrt(beta2), hence h^o2 by beta2
            worst = std::max(worst, rel_diff(h_after, scale(reconstruct(s2),
                                                            std::sqrt(beta2))));
            worst = std::max(
                worst, rel_diff(hadamard_square(h_after),
                                scale(hadamard_square(reconstruct(s2)), beta2)));

            const LowRankMoment s3 = random_state(rng, 8, 6, 2, 1e-8);
            const Matrix u_after = reconstruct(
                muon_moment_update(s3, zero, mu, 1.0 - std::sqrt(mu)));
            worst = std::max(worst, rel_diff(u_after, scale(reconstruct(s3), mu)));
        }
        return fail_if(worst > 1e-12, "rel err " + format_double(worst) + " > 1e-12");
    });

    // ------------------------------------------------------------------
    acc.criterion(2, "gradient correctness vs central finite differences", [] {
        Rng rng(202);
        const double h = 1e-6;
        double worst = 0.0;
        for (int inst = 0; inst < 20; ++inst) {
            const int p = 4 + static_cast<int>(rng.next_u64() % 5);
            const int q = 3 + static_cast<int>(rng.next_u64() % 4);
            const int r = 1 + static_cast<int>(rng.next_u64() % 3);
            const double mu = inst % 2 == 0 ? 0.0 : 0.85;
            LowRankMoment s = random_state(rng, p, q, std::min({r, p, q}), 1e-8);
            const Matrix g = random_matrix(rng, p, q);
            const FactorGrads an =
                mu == 0.0 ? regression_grads(s, g) : muon_regression_grads(s, g, mu);
            const auto loss = [&](const LowRankMoment& st) {
                return mu == 0.0 ? regression_loss(st, g)
                                 : muon_regression_loss(st, g, mu);
            };
            for (int probe = 0; probe < 8; ++probe) {
                const bool in_b = rng.uniform() < 0.5;
                const std::size_t idx = rng.next_u64() % (in_b ? s.b : s.a).size();
                LowRankMoment plus = s, minus = s;
                (in_b ? plus.b : plus.a).data()[idx] += h;
                (in_b ? minus.b : minus.a).data()[idx] -= h;
                const double fd = (loss(plus) - loss(minus)) / (2 * h);
                const double got = (in_b ? an.b : an.a).data()[idx];
                worst = std::max(worst,
                                 std::fabs(fd - got) /
                                     std::max({std::fabs(fd), std::fabs(got), 1e-8}));
            }
        }
        return fail_if(worst > 1e-6, "rel err " + format_double(worst) + " > 1e-6");
    });

    // ------------------------------------------------------------------
    acc.criterion(3, "Newton directions solve H vec(d) = vec(grad)", [] {
        Rng rng(203);
        double worst = 0.0;
        for (int inst = 0; inst < 20; ++inst) {
            const int p = 5 + static_cast<int>(rng.next_u64() % 4);
            const int q = 4 + static_cast<int>(rng.next_u64() % 3);
            const int r = 2 + static_cast<int>(rng.next_u64() % 2);
            const double mu = inst % 2 == 0 ? 0.0 : 0.9;
            const LowRankMoment s = random_state(rng, p, q, r, 1e-12);
            const Matrix g = random_matrix(rng, p, q);
            const FactorGrads grads =
                mu == 0.0 ? regression_grads(s, g) : muon_regression_grads(s, g, mu);
            const FactorGrads dirs = newton_directions(s, g, mu);
            const Matrix h_bb =
                oracles::kron(matmul(s.a, transpose(s.a)), Matrix::identity(p));
            const Matrix h_aa =
                oracles::kron(Matrix::identity(q), matmul(transpose(s.b), s.b));
            const auto check = [](const Matrix& h, const Matrix& d, const Matrix& grad) {
                const std::vector<double> hd = oracles::mat_vec(h, oracles::vec_col(d));
                const std::vector<double> gv = oracles::vec_col(grad);
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < hd.size(); ++i) {
                    num += (hd[i] - gv[i]) * (hd[i] - gv[i]);
                    den += gv[i] * gv[i];
                }
                return std::sqrt(num / den);
            };
            worst = std::max(worst, check(h_bb, dirs.b, grads.b));
            worst = std::max(worst, check(h_aa, dirs.a, grads.a));
        }
        return fail_if(worst > 1e-8, "rel err " + format_double(worst) + " > 1e-8");
    });

    // ------------------------------------------------------------------
    acc.criterion(4, "expansion identity and quadratic-term bound", [] {
        Rng rng(204);
        double worst = 0.0;
        double worst_margin = -1.0;
        for (int inst = 0; inst < 50; ++inst) {
            const double gamma = 0.02 + 0.4 * rng.uniform();
            const double lambda = inst % 2 == 0 ? 1e-6 : 1e-3;
            const LowRankMoment s = random_state(rng, 7, 5, 2, lambda);
            const Matrix g = random_matrix(rng, 7, 5);
            const Matrix direct = reconstruct(first_moment_update(s, g, gamma));
            const Matrix pa = projection_row(s);
            const Matrix pb = projection_col(s);
            const Matrix q_term = matmul(matmul(g, damped_right_pinv(s.a, lambda)),
                                         matmul(damped_left_pinv(s.b, lambda), g));
            Matrix predicted = scale(reconstruct(s), (1 - gamma) * (1 - gamma));
            predicted = add_scaled(1.0, predicted, gamma * (1 - gamma),
                                   add_scaled(1.0, matmul(pb, g), 1.0, matmul(g, pa)));
            predicted = add_scaled(1.0, predicted, gamma * gamma, q_term);
            worst = std::max(worst, rel_diff(direct, predicted));
            const double g_f = frobenius_norm(g);
            worst_margin = std::max(
                worst_margin, frobenius_norm(q_term) - g_f * g_f / (4.0 * lambda));
        }
        if (worst > 1e-10) return "expansion rel err " + format_double(worst);
        if (worst_margin > 0.0)
            return "quadratic bound exceeded by " + format_double(worst_margin);
        return std::string();
    });

    // ------------------------------------------------------------------
    acc.criterion(5, "ALS convergence to the best rank-2 approximation", [] {
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng rng(300 + seed);
            const Matrix g = random_matrix(rng, 8, 6);
            LowRankMoment s = init_low_rank(8, 6, 2, 1e-10, seed);
            for (int t = 0; t < 2000; ++t) s = first_moment_update(s, g, 0.05);
            const double err = frobenius_norm(add_scaled(1.0, reconstruct(s), -1.0, g));
            worst = std::max(worst, std::fabs(err - oracles::eckart_young_error(g, 2)));
        }
        return fail_if(worst > 1e-3,
                       "gap to Eckart-Young " + format_double(worst) + " > 1e-3");
    });

    // ------------------------------------------------------------------
    // Criteria 6 and 7 share one shadow-oracle sensing run.
    auto sensing = low_rank_sensing_problem(16, 12, 2, 0.0, 206);
    const OptimizerSpec sensing_spec = adam_spec(OptKind::lorapre_adam, 0.02, 2, 206, 0.25);
    const RunRecord sensing_run = run_training(*sensing, sensing_spec, 1000, true);
    const BoundReport sensing_bounds =
        compute_bounds(sensing_run, sensing_spec.adam.beta1, sensing_spec.adam.damping,
                       16ll * 12ll);

    acc.criterion(6, "reconstruction-error recursion and steady-state bound", [&] {
        if (sensing_run.aborted) return std::string("run aborted");
        if (sensing_run.steps != 1000) return std::string("incomplete run");
        if (sensing_bounds.recursion_violations != 0)
            return "closed-form ceiling violations: " +
                   std::to_string(sensing_bounds.recursion_violations);
        if (sensing_bounds.recursion_violations_measured != 0)
            return "measured-residual violations: " +
                   std::to_string(sensing_bounds.recursion_violations_measured);
        return fail_if(sensing_bounds.E_ss > sensing_bounds.E_bound,
                       "E_ss " + format_double(sensing_bounds.E_ss) + " > E_bound " +
                           format_double(sensing_bounds.E_bound));
    });

    acc.criterion(7, "effective-moment error identity and ceiling", [&] {
        const MomentErrorReport rep = moment_error_report(
            sensing_run.shadow.front(), sensing_spec.adam.beta1,
            sensing_spec.adam.beta2, sensing_bounds.E_bound, 16ll * 12ll);
        if (rep.max_identity_gap > 1e-12)
            return "identity gap " + format_double(rep.max_identity_gap) + " > 1e-12";
        return fail_if(rep.delta_v_ceiling_violations != 0,
                       std::to_string(rep.delta_v_ceiling_violations) +
                           " second-moment ceiling violations");
    });

    // ------------------------------------------------------------------
    acc.criterion(8, "effective second moment entry-wise non-negative, no NaN", [&] {
        Rng rng(208);
        double min_entry = 0.0;
        for (int i = 0; i < 200; ++i) {
            const LowRankMoment s = random_state(rng, 6, 5, 2, 1e-8);
            const Matrix g = random_matrix(rng, 6, 5);
            const Matrix v = effective_second_moment(s, g, 0.95);
            if (!v.is_finite()) return std::string("non-finite effective second moment");
            for (std::size_t k = 0; k < v.size(); ++k)
                min_entry = std::min(min_entry, v.data()[k]);
        }
        // the shared sensing run must also have stayed finite throughout
        if (sensing_run.aborted) return std::string("suite run aborted on a NaN");
        return fail_if(min_entry < 0.0, "negative entry " + format_double(min_entry));
    });

    // ------------------------------------------------------------------
    acc.criterion(9, "orthogonalizer contract: band, zero, transpose", [] {
        Rng rng(209);
        double lo = 1e9, hi = 0.0, transpose_gap = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int p = 2 + static_cast<int>(rng.next_u64() % 15);
            const int q = 2 + static_cast<int>(rng.next_u64() % 15);
            const Matrix m = oracles::conditioned_matrix(rng, p, q, 10.0,
                                                         0.5 + 2.0 * rng.uniform());
            for (double s : svd_small(newton_schulz5(m, 5)).singular_values) {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            if (i < 10) {
                transpose_gap = std::max(
                    transpose_gap,
                    frobenius_norm(add_scaled(1.0, newton_schulz5(transpose(m), 5), -1.0,
                                              transpose(newton_schulz5(m, 5)))));
            }
        }
        if (lo < 0.7 || hi > 1.3)
            return "singular values in [" + format_double(lo) + ", " +
                   format_double(hi) + "] outside [0.7, 1.3]";
        if (frobenius_norm(newton_schulz5(Matrix(4, 4), 5)) != 0.0)
            return std::string("NS5(0) != 0");
        return fail_if(transpose_gap > 1e-10,
                       "transpose gap " + format_double(transpose_gap));
    });

    // ------------------------------------------------------------------
    acc.criterion(10, "first-step equivalence of dense and low-rank Adam", [] {
        Rng rng(210);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const int p = 5 + static_cast<int>(rng.next_u64() % 8);
            const int q = 4 + static_cast<int>(rng.next_u64() % 8);
            const Matrix g = random_matrix(rng, p, q);
            Matrix theta_dense = random_matrix(rng, p, q);
            Matrix theta_lr = theta_dense;
            AdamConfig cfg;
            cfg.lr = 0.02;
            cfg.rank = 2;
            cfg.damping = 1e-12;
            cfg.scale = 1.0;
            OptimizerSlot dense;
            dense.kind = SlotKind::dense_adam;
            dense.m = DenseMoment{Matrix(p, q)};
            dense.v = DenseMoment{Matrix(p, q)};
            OptimizerSlot lr;
            lr.kind = SlotKind::low_rank_adam;
            lr.m_lr = init_low_rank(p, q, 2, cfg.damping, 400 + i);
            lr.v_lr = init_low_rank(p, q, 2, cfg.damping, 500 + i);
            dense_adam_step(dense, theta_dense, g, cfg);
            lorapre_adam_step(lr, theta_lr, g, cfg);
            worst = std::max(worst,
                             frobenius_norm(add_scaled(1.0, theta_dense, -1.0, theta_lr)));
        }
        return fail_if(worst > 1e-8, "step-1 gap " + format_double(worst) + " > 1e-8");
    });

    // ------------------------------------------------------------------
    acc.criterion(11, "memory accounting, integer-exact for the quoted shapes", [] {
        const int dims[] = {512, 768, 1024, 2048};
        const int ranks[] = {128, 256, 256, 512};
        for (int i = 0; i < 4; ++i) {
            const std::vector<ParamSpec> specs = {ParamSpec{"w", {dims[i], dims[i]}}};
            const std::vector<Route> routes = param_routing(specs, ranks[i]);
            if (routes[0] != Route::low_rank) return std::string("routing failed");
            const MemoryReport low =
                memory_report(specs, routes, OptKind::lorapre_adam, ranks[i]);
            const MemoryReport dense = memory_report(
                specs, {Route::dense}, OptKind::adam, ranks[i]);
            const long long expect_low = 2ll * (dims[i] + dims[i]) * ranks[i];
            const long long expect_dense = 2ll * dims[i] * dims[i];
            if (low.items[0].state_entries != expect_low)
                return "low-rank entries " + std::to_string(low.items[0].state_entries) +
                       " != " + std::to_string(expect_low);
            if (dense.items[0].state_entries != expect_dense)
                return "dense entries " + std::to_string(dense.items[0].state_entries) +
                       " != " + std::to_string(expect_dense);
        }
        return std::string();
    });

    // ------------------------------------------------------------------
    acc.criterion(12, "optimization parity within 1.5x of dense Adam", [] {
        // scale = 1 so both optimizers take identically scaled directions.
        // Learning rates frozen from the reference runs: at these rates the
        // runs are still descending at step 1000, which is where the ratio is
        // meaningful (at the convergence floor, dense Adam sits at machine
        // precision on these deterministic problems while the factored
        // optimizer sits at its analyzed reconstruction-error neighborhood,
        // so floor ratios measure nothing but noise).
        const auto final_loss = [](Problem& problem, OptKind kind, double lr, int rank,
                                   std::uint64_t seed) {
            const RunRecord record =
                run_training(problem, adam_spec(kind, lr, rank, seed, 1.0), 1000, false);
            if (record.aborted) return -1.0;
            return record.final_loss;
        };
        {
            auto quad_dense = quadratic_problem(32, 32, 100.0, 212);
            auto quad_lr = quadratic_problem(32, 32, 100.0, 212);
            const double dense = final_loss(*quad_dense, OptKind::adam, 5e-4, 8, 212);
            const double low = final_loss(*quad_lr, OptKind::lorapre_adam, 5e-4, 8, 212);
            if (dense < 0.0 || low < 0.0) return std::string("quadratic run aborted");
            if (low > 1.5 * dense)
                return "quadratic: low-rank " + format_double(low) + " vs dense " +
                       format_double(dense);
        }
        {
            auto sense_dense = low_rank_sensing_problem(32, 24, 4, 0.0, 213);
            auto sense_lr = low_rank_sensing_problem(32, 24, 4, 0.0, 213);
            const double dense = final_loss(*sense_dense, OptKind::adam, 3e-4, 8, 213);
            const double low = final_loss(*sense_lr, OptKind::lorapre_adam, 3e-4, 8, 213);
            if (dense < 0.0 || low < 0.0) return std::string("sensing run aborted");
            if (low > 1.5 * dense)
                return "sensing: low-rank " + format_double(low) + " vs dense " +
                       format_double(dense);
        }
        return std::string();
    });

    // ------------------------------------------------------------------
    acc.criterion(13, "rank robustness: final losses within 2x across ranks", [] {
        // lr frozen from reference runs (descending regime, see criterion 12)
        double lo = 1e300, hi = 0.0;
        for (int rank : {4, 8, 16}) {
            auto problem = low_rank_sensing_problem(32, 24, 4, 0.0, 214);
            const RunRecord record = run_training(
                *problem, adam_spec(OptKind::lorapre_adam, 3e-4, rank, 214, 0.25), 1000,
                false);
            if (record.aborted) return std::string("run aborted");
            lo = std::min(lo, record.final_loss);
            hi = std::max(hi, record.final_loss);
        }
        return fail_if(hi > 2.0 * lo, "final losses span [" + format_double(lo) + ", " +
                                          format_double(hi) + "], ratio " +
                                          format_double(hi / lo) + " > 2");
    });

    // ------------------------------------------------------------------
    acc.criterion(14, "determinism: repeated runs give byte-identical CSV", [&] {
        const auto run_csv = [] {
            auto problem = low_rank_sensing_problem(16, 12, 2, 0.0, 206);
            const RunRecord record = run_training(
                *problem, adam_spec(OptKind::lorapre_adam, 0.02, 2, 206, 0.25), 200,
                true);
            return run_csv_string(record);
        };
        const std::string a = run_csv();
        const std::string b = run_csv();
        return fail_if(a != b, "rerun produced different CSV bytes");
    });

    std::printf("acceptance: %d/%d criteria passed\n", acc.total - acc.failures,
                acc.total);
    return acc.failures == 0 ? 0 : 1;
}
