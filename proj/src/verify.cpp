#include "lorapre/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>

#include "lorapre/diagnostics.hpp"
#include "lorapre/harness.hpp"
#include "lorapre/linalg.hpp"
#include "lorapre/momentum.hpp"
#include "lorapre/optimizers.hpp"
#include "lorapre/problems.hpp"
#include "lorapre/rng.hpp"

namespace lorapre {

namespace {

Matrix random_matrix(Rng& rng, int p, int q, double stddev = 1.0) {
    Matrix m(p, q);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
    return m;
}

LowRankMoment random_state(Rng& rng, int p, int q, int r, double damping) {
    LowRankMoment s{random_matrix(rng, p, r), random_matrix(rng, r, q), damping};
    return s;
}

double rel_diff(const Matrix& got, const Matrix& want) {
    return frobenius_norm(add_scaled(1.0, got, -1.0, want)) /
           std::max(frobenius_norm(want), 1e-300);
}

// Column-stacked vec and Kronecker product, for the explicit Hessian check.
std::vector<double> vec_col(const Matrix& m) {
    std::vector<double> v;
    v.reserve(m.size());
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < m.rows(); ++i) v.push_back(m(i, j));
    return v;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i1 = 0; i1 < a.rows(); ++i1)
        for (int j1 = 0; j1 < a.cols(); ++j1)
            for (int i2 = 0; i2 < b.rows(); ++i2)
                for (int j2 = 0; j2 < b.cols(); ++j2)
                    out(i1 * b.rows() + i2, j1 * b.cols() + j2) = a(i1, j1) * b(i2, j2);
    return out;
}

// max relative error of H vec(d) against vec(grad) for the plain (mu = 0)
// or momentum-shifted objective on one random instance.
double newton_direction_error(Rng& rng, double mu) {
    const int p = 6, q = 5, r = 3;
    LowRankMoment state = random_state(rng, p, q, r, 1e-12);
    const Matrix g = random_matrix(rng, p, q);
    const FactorGrads grads =
        mu == 0.0 ? regression_grads(state, g) : muon_regression_grads(state, g, mu);
    const FactorGrads dirs = newton_directions(state, g, mu);

    const Matrix h_bb = kron(matmul(state.a, transpose(state.a)), Matrix::identity(p));
    const Matrix h_aa = kron(Matrix::identity(q), matmul(transpose(state.b), state.b));

    const auto apply = [](const Matrix& h, const std::vector<double>& x) {
        std::vector<double> y(x.size(), 0.0);
        for (int i = 0; i < h.rows(); ++i) {
            double s = 0.0;
            for (int j = 0; j < h.cols(); ++j) s += h(i, j) * x[j];
            y[static_cast<std::size_t>(i)] = s;
        }
        return y;
    };
    const auto check = [&](const Matrix& h, const Matrix& d, const Matrix& grad) {
        const std::vector<double> hd = apply(h, vec_col(d));
        const std::vector<double> gv = vec_col(grad);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < hd.size(); ++i) {
            num += (hd[i] - gv[i]) * (hd[i] - gv[i]);
            den += gv[i] * gv[i];
        }
        return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
    };
    return std::max(check(h_bb, dirs.b, grads.b), check(h_aa, dirs.a, grads.a));
}

struct Suite {
    std::vector<CheckResult> results;

    void run(const std::string& name, const std::function<std::string()>& body) {
        CheckResult r;
        r.name = name;
        try {
            r.detail = body(); // empty string means pass
            r.pass = r.detail.empty();
            if (r.pass) r.detail = "ok";
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    }
};

std::string fail_if(bool bad, const std::string& msg) { return bad ? msg : ""; }

} // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
    Suite suite;
    const double corrupt = options.corrupt_coupling ? 1.05 : 1.0;

    suite.run("coupling_decay_first_moment", [&] {
        Rng rng(101);
        const Matrix zero(8, 6);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double beta1 = 0.5 + 0.49 * rng.uniform();
            const double gamma = corrupt * coupling_from_beta(beta1, MomentOrder::first).gamma;
            LowRankMoment s = random_state(rng, 8, 6, 2, 1e-8);
            const Matrix before = reconstruct(s);
            const Matrix after = reconstruct(first_moment_update(s, zero, gamma));
            worst = std::max(worst, rel_diff(after, scale(before, beta1)));
        }
        return fail_if(worst > 1e-12,
                       "decay mismatch rel err " + std::to_string(worst));
    });

    suite.run("coupling_decay_second_moment", [&] {
        Rng rng(102);
        const Matrix zero(8, 6);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double beta2 = 0.5 + 0.49 * rng.uniform();
            const double gamma =
                corrupt * coupling_from_beta(beta2, MomentOrder::second).gamma;
            LowRankMoment s = random_state(rng, 8, 6, 2, 1e-8);
            const Matrix h2_before = hadamard_square(reconstruct(s));
            const Matrix h2_after =
                hadamard_square(reconstruct(second_moment_update(s, zero, gamma)));
            worst = std::max(worst, rel_diff(h2_after, scale(h2_before, beta2)));
        }
        return fail_if(worst > 1e-12,
                       "squared-reconstruction decay rel err " + std::to_string(worst));
    });

    suite.run("coupling_decay_muon", [&] {
        Rng rng(103);
        const Matrix zero(8, 6);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double mu = 0.5 + 0.49 * rng.uniform();
            const double gamma = corrupt * (1.0 - std::sqrt(mu));
            LowRankMoment s = random_state(rng, 8, 6, 2, 1e-8);
            const Matrix before = reconstruct(s);
            const Matrix after = reconstruct(muon_moment_update(s, zero, mu, gamma));
            worst = std::max(worst, rel_diff(after, scale(before, mu)));
        }
        return fail_if(worst > 1e-12, "decay mismatch rel err " + std::to_string(worst));
    });

    suite.run("regression_gradients_plain", [&] {
        Rng rng(104);
        const double h = 1e-6;
        double worst = 0.0;
        for (int inst = 0; inst < 10; ++inst) {
            LowRankMoment s = random_state(rng, 6, 4, 2, 1e-8);
            const Matrix g = random_matrix(rng, 6, 4);
            const FactorGrads an = regression_grads(s, g);
            for (int probe = 0; probe < 8; ++probe) {
                const bool in_b = rng.uniform() < 0.5;
                Matrix& target_ref = in_b ? s.b : s.a;
                const std::size_t idx = rng.next_u64() % target_ref.size();
                LowRankMoment plus = s, minus = s;
                (in_b ? plus.b : plus.a).data()[idx] += h;
                (in_b ? minus.b : minus.a).data()[idx] -= h;
                const double fd =
                    (regression_loss(plus, g) - regression_loss(minus, g)) / (2 * h);
                const double got = (in_b ? an.b : an.a).data()[idx];
                worst = std::max(worst, std::fabs(fd - got) /
                                            std::max({std::fabs(fd), std::fabs(got), 1e-8}));
            }
        }
        return fail_if(worst > 1e-6, "finite-difference rel err " + std::to_string(worst));
    });

    suite.run("regression_gradients_muon_shifted", [&] {
        Rng rng(105);
        const double h = 1e-6, mu = 0.9;
        double worst = 0.0;
        for (int inst = 0; inst < 10; ++inst) {
            LowRankMoment s = random_state(rng, 6, 4, 2, 1e-8);
            const Matrix g = random_matrix(rng, 6, 4);
            const FactorGrads an = muon_regression_grads(s, g, mu);
            for (int probe = 0; probe < 8; ++probe) {
                const bool in_b = rng.uniform() < 0.5;
                const std::size_t idx = rng.next_u64() % (in_b ? s.b : s.a).size();
                LowRankMoment plus = s, minus = s;
                (in_b ? plus.b : plus.a).data()[idx] += h;
                (in_b ? minus.b : minus.a).data()[idx] -= h;
                const double fd = (muon_regression_loss(plus, g, mu) -
                                   muon_regression_loss(minus, g, mu)) /
                                  (2 * h);
                const double got = (in_b ? an.b : an.a).data()[idx];
                worst = std::max(worst, std::fabs(fd - got) /
                                            std::max({std::fabs(fd), std::fabs(got), 1e-8}));
            }
        }
        return fail_if(worst > 1e-6, "finite-difference rel err " + std::to_string(worst));
    });

    suite.run("newton_direction_plain", [&] {
        Rng rng(106);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i)
            worst = std::max(worst, newton_direction_error(rng, 0.0));
        return fail_if(worst > 1e-8, "H vec(d) vs vec(grad) rel err " + std::to_string(worst));
    });

    suite.run("newton_direction_muon", [&] {
        Rng rng(107);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i)
            worst = std::max(worst, newton_direction_error(rng, 0.9));
        return fail_if(worst > 1e-8, "H vec(d) vs vec(grad) rel err " + std::to_string(worst));
    });

    suite.run("expansion_identity", [&] {
        Rng rng(108);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double gamma = 0.02 + 0.3 * rng.uniform();
            LowRankMoment s = random_state(rng, 7, 5, 2, 1e-6);
            const Matrix g = random_matrix(rng, 7, 5);
            const Matrix direct = reconstruct(first_moment_update(s, g, gamma));
            const Matrix pa = projection_row(s);
            const Matrix pb = projection_col(s);
            const Matrix q_term = matmul(matmul(g, damped_right_pinv(s.a, s.damping)),
                                         matmul(damped_left_pinv(s.b, s.damping), g));
            Matrix predicted = scale(reconstruct(s), (1 - gamma) * (1 - gamma));
            predicted = add_scaled(1.0, predicted, gamma * (1 - gamma),
                                   add_scaled(1.0, matmul(pb, g), 1.0, matmul(g, pa)));
            predicted = add_scaled(1.0, predicted, gamma * gamma, q_term);
            worst = std::max(worst, rel_diff(direct, predicted));
        }
        return fail_if(worst > 1e-10, "expansion rel err " + std::to_string(worst));
    });

    suite.run("quadratic_term_bound", [&] {
        Rng rng(109);
        double worst_margin = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double lambda = i % 2 == 0 ? 1e-4 : 1e-2;
            LowRankMoment s = random_state(rng, 7, 5, 2, lambda);
            const Matrix g = random_matrix(rng, 7, 5);
            const Matrix q_term = matmul(matmul(g, damped_right_pinv(s.a, lambda)),
                                         matmul(damped_left_pinv(s.b, lambda), g));
            const double g_f = frobenius_norm(g);
            const double bound = g_f * g_f / (4.0 * lambda);
            worst_margin = std::max(worst_margin, frobenius_norm(q_term) - bound);
        }
        return fail_if(worst_margin > 0.0,
                       "|Q|_F exceeds G^2/(4 lambda) by " + std::to_string(worst_margin));
    });

    suite.run("als_fixed_point", [&] {
        Rng rng(110);
        const Matrix g = random_matrix(rng, 8, 6);
        LowRankMoment s = init_low_rank(8, 6, 2, 1e-10, 7);
        for (int t = 0; t < 4000; ++t) s = first_moment_update(s, g, 0.05);
        const double rb = frobenius_norm(add_scaled(
            1.0, s.b, -1.0, matmul(g, damped_right_pinv(s.a, s.damping))));
        const double ra = frobenius_norm(add_scaled(
            1.0, s.a, -1.0, matmul(damped_left_pinv(s.b, s.damping), g)));
        return fail_if(rb > 1e-6 || ra > 1e-6,
                       "stationarity residuals " + std::to_string(rb) + ", " +
                           std::to_string(ra));
    });

    suite.run("pinv_spectral_bound", [&] {
        Rng rng(111);
        double worst_ratio = 0.0;
        const double lambdas[] = {1e-8, 1e-4, 1.0};
        for (int i = 0; i < 60; ++i) {
            const int p = 2 + static_cast<int>(rng.next_u64() % 15);
            const int q = 2 + static_cast<int>(rng.next_u64() % 15);
            const double lambda = lambdas[i % 3];
            const Matrix m = random_matrix(rng, p, q);
            const double bound = 1.0 / (2.0 * std::sqrt(lambda));
            const double s_right =
                svd_small(damped_right_pinv(m, lambda)).singular_values.front();
            const double s_left =
                svd_small(damped_left_pinv(m, lambda)).singular_values.front();
            worst_ratio = std::max(worst_ratio, std::max(s_right, s_left) / bound);
        }
        return fail_if(worst_ratio > 1.0 + 1e-12,
                       "spectral norm ratio " + std::to_string(worst_ratio));
    });

    suite.run("ns5_singular_value_band", [&] {
        Rng rng(112);
        double lo = 1e9, hi = 0.0;
        for (int i = 0; i < 30; ++i) {
            const int p = 2 + static_cast<int>(rng.next_u64() % 15);
            const int q = 2 + static_cast<int>(rng.next_u64() % 15);
            // clip conditioning to 10
            SvdResult svd = svd_small(random_matrix(rng, p, q));
            const double s_max = svd.singular_values.front();
            Matrix m(p, q);
            for (std::size_t k = 0; k < svd.singular_values.size(); ++k) {
                const double s = std::max(svd.singular_values[k], s_max / 10.0);
                for (int a = 0; a < p; ++a)
                    for (int b = 0; b < q; ++b)
                        m(a, b) += s * svd.u(a, static_cast<int>(k)) *
                                   svd.v(b, static_cast<int>(k));
            }
            for (double s : svd_small(newton_schulz5(m, 5)).singular_values) {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        }
        const Matrix zero(4, 4);
        const double zero_norm = frobenius_norm(newton_schulz5(zero, 5));
        return fail_if(lo < 0.7 || hi > 1.3 || zero_norm != 0.0,
                       "output singular values in [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "], NS5(0) norm " +
                           std::to_string(zero_norm));
    });

    suite.run("ns5_transpose_consistency", [&] {
        Rng rng(113);
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            const int p = 3 + static_cast<int>(rng.next_u64() % 6);
            const int q = 3 + static_cast<int>(rng.next_u64() % 6);
            const Matrix m = random_matrix(rng, p, q);
            worst = std::max(
                worst, frobenius_norm(add_scaled(1.0, newton_schulz5(transpose(m), 5),
                                                 -1.0, transpose(newton_schulz5(m, 5)))));
        }
        return fail_if(worst > 1e-10, "NS5(m^T) vs NS5(m)^T gap " + std::to_string(worst));
    });

    suite.run("svd_reconstruction", [&] {
        Rng rng(114);
        double worst_rec = 0.0, worst_orth = 0.0;
        for (int i = 0; i < 10; ++i) {
            const int p = 3 + static_cast<int>(rng.next_u64() % 10);
            const int q = 3 + static_cast<int>(rng.next_u64() % 10);
            const Matrix m = random_matrix(rng, p, q);
            const SvdResult svd = svd_small(m);
            Matrix rec(p, q);
            for (std::size_t k = 0; k < svd.singular_values.size(); ++k)
                for (int a = 0; a < p; ++a)
                    for (int b = 0; b < q; ++b)
                        rec(a, b) += svd.singular_values[k] *
                                     svd.u(a, static_cast<int>(k)) *
                                     svd.v(b, static_cast<int>(k));
            worst_rec = std::max(worst_rec, rel_diff(rec, m));
            const Matrix utu = matmul(transpose(svd.u), svd.u);
            const Matrix vtv = matmul(transpose(svd.v), svd.v);
            worst_orth = std::max(
                worst_orth,
                std::max(rel_diff(utu, Matrix::identity(utu.rows())),
                         rel_diff(vtv, Matrix::identity(vtv.rows()))));
        }
        return fail_if(worst_rec > 1e-9 || worst_orth > 1e-9,
                       "reconstruction rel err " + std::to_string(worst_rec) +
                           ", orthonormality " + std::to_string(worst_orth));
    });

    suite.run("first_step_equivalence", [&] {
        Rng rng(115);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const Matrix g = random_matrix(rng, 6, 5);
            Matrix theta_dense = random_matrix(rng, 6, 5);
            Matrix theta_lr = theta_dense;
            AdamConfig cfg;
            cfg.lr = 0.01;
            cfg.rank = 2;
            cfg.damping = 1e-12;
            cfg.scale = 1.0;
            OptimizerSlot dense;
            dense.kind = SlotKind::dense_adam;
            dense.m = DenseMoment{Matrix(6, 5)};
            dense.v = DenseMoment{Matrix(6, 5)};
            OptimizerSlot lr;
            lr.kind = SlotKind::low_rank_adam;
            lr.m_lr = init_low_rank(6, 5, 2, cfg.damping, 1000 + i);
            lr.v_lr = init_low_rank(6, 5, 2, cfg.damping, 2000 + i);
            dense_adam_step(dense, theta_dense, g, cfg);
            lorapre_adam_step(lr, theta_lr, g, cfg);
            worst = std::max(worst, frobenius_norm(add_scaled(1.0, theta_dense, -1.0,
                                                              theta_lr)));
        }
        return fail_if(worst > 1e-8, "step-1 update gap " + std::to_string(worst));
    });

    suite.run("reconstruction_error_recursion", [&] {
        auto problem = low_rank_sensing_problem(12, 10, 2, 0.0, 21);
        OptimizerSpec spec;
        spec.kind = OptKind::lorapre_adam;
        spec.adam.lr = 0.02;
        spec.adam.rank = 2;
        spec.seed = 21;
        const RunRecord run = run_training(*problem, spec, 300, true);
        const BoundReport bounds = compute_bounds(run, spec.adam.beta1,
                                                  spec.adam.damping, 12ll * 10ll);
        return fail_if(bounds.recursion_violations != 0 ||
                           bounds.recursion_violations_measured != 0 ||
                           bounds.E_ss > bounds.E_bound,
                       "violations closed-form " +
                           std::to_string(bounds.recursion_violations) + ", measured " +
                           std::to_string(bounds.recursion_violations_measured) +
                           ", E_ss " + std::to_string(bounds.E_ss) + " vs E_bound " +
                           std::to_string(bounds.E_bound));
    });

    suite.run("effective_moment_error_identity", [&] {
        auto problem = low_rank_sensing_problem(12, 10, 2, 0.0, 22);
        OptimizerSpec spec;
        spec.kind = OptKind::lorapre_adam;
        spec.adam.lr = 0.02;
        spec.adam.rank = 2;
        spec.seed = 22;
        const RunRecord run = run_training(*problem, spec, 300, true);
        const BoundReport bounds = compute_bounds(run, spec.adam.beta1,
                                                  spec.adam.damping, 12ll * 10ll);
        const MomentErrorReport rep = moment_error_report(
            run.shadow.front(), spec.adam.beta1, spec.adam.beta2, bounds.E_bound,
            12ll * 10ll);
        return fail_if(rep.max_identity_gap > 1e-12 || rep.delta_v_ceiling_violations != 0,
                       "identity gap " + std::to_string(rep.max_identity_gap) +
                           ", ceiling violations " +
                           std::to_string(rep.delta_v_ceiling_violations));
    });

    suite.run("popoviciu_bound", [&] {
        auto problem = low_rank_sensing_problem(12, 10, 2, 0.0, 23);
        OptimizerSpec spec;
        spec.kind = OptKind::lorapre_adam;
        spec.adam.lr = 0.02;
        spec.adam.rank = 2;
        spec.seed = 23;
        const RunRecord run = run_training(*problem, spec, 300, true);
        const PopoviciuReport rep = popoviciu_check(run.shadow.front(), 12ll * 10ll);
        return fail_if(!rep.ok, "observed " + std::to_string(rep.max_observed) +
                                    " vs ceiling " + std::to_string(rep.ceiling));
    });

    suite.run("effective_second_moment_positivity", [&] {
        Rng rng(116);
        double min_entry = 0.0;
        for (int i = 0; i < 50; ++i) {
            LowRankMoment s = random_state(rng, 6, 5, 2, 1e-8);
            const Matrix g = random_matrix(rng, 6, 5);
            const Matrix v = effective_second_moment(s, g, 0.95);
            for (std::size_t k = 0; k < v.size(); ++k)
                min_entry = std::min(min_entry, v.data()[k]);
        }
        return fail_if(min_entry < 0.0, "negative entry " + std::to_string(min_entry));
    });

    suite.run("memory_accounting", [&] {
        const std::vector<ParamSpec> specs = {ParamSpec{"w", {512, 512}},
                                              ParamSpec{"b", {64}}};
        const std::vector<Route> routes = param_routing(specs, 128);
        const MemoryReport rep = memory_report(specs, routes, OptKind::lorapre_adam, 128);
        const long long expect_w = 2ll * (512 + 512) * 128;
        const bool ok = rep.items[0].state_entries == expect_w &&
                        rep.items[1].state_entries == 2ll * 64 &&
                        rep.items[0].dense_adam_entries == 2ll * 512 * 512;
        return fail_if(!ok, "entries " + std::to_string(rep.items[0].state_entries) +
                                " vs expected " + std::to_string(expect_w));
    });

    suite.run("run_determinism", [&] {
        const auto run_once = [] {
            auto problem = low_rank_sensing_problem(10, 8, 2, 0.05, 31);
            OptimizerSpec spec;
            spec.kind = OptKind::lorapre_adam;
            spec.adam.lr = 0.02;
            spec.adam.rank = 2;
            spec.seed = 31;
            return run_training(*problem, spec, 100, true);
        };
        const RunRecord a = run_once();
        const RunRecord b = run_once();
        const bool equal =
            a.loss == b.loss && a.grad_norm == b.grad_norm &&
            a.shadow.front().e_m == b.shadow.front().e_m &&
            a.shadow.front().e_v == b.shadow.front().e_v &&
            a.shadow.front().delta_subspace == b.shadow.front().delta_subspace &&
            a.final_loss == b.final_loss;
        return fail_if(!equal, "repeated run differs bitwise");
    });

    return suite.results;
}

} // namespace lorapre
