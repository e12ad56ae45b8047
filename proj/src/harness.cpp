#include "lorapre/harness.hpp"

#include <chrono>
#include <cmath>

namespace lorapre {

double LrSchedule::multiplier(long step, long total_steps) const {
    double scale = 1.0;
    if (warmup_steps > 0 && step <= warmup_steps)
        scale = static_cast<double>(step) / warmup_steps;
    else if (cosine_decay && total_steps > warmup_steps) {
        const double progress = static_cast<double>(step - warmup_steps) /
                                static_cast<double>(total_steps - warmup_steps);
        const double pi = 3.14159265358979323846;
        scale = 0.5 * (1.0 + std::cos(pi * progress));
    }
    return scale;
}

MemoryReport memory_report_for(const Optimizer& optimizer) {
    MemoryReport report;
    for (std::size_t i = 0; i < optimizer.param_count(); ++i) {
        const ParamSpec& spec = optimizer.param_specs()[i];
        const OptimizerSlot& slot = optimizer.slot(i);
        MemoryItem item;
        item.param = spec.name;
        item.slot_kind = slot_kind_name(slot.kind);
        item.state_entries = slot.state_entries();
        item.dense_adam_entries = 2ll * spec.element_count();
        report.total_entries += item.state_entries;
        report.total_dense_adam_entries += item.dense_adam_entries;
        report.items.push_back(std::move(item));
    }
    return report;
}

namespace {

// Dense state twins for one low-rank parameter, fed the same gradients.
struct ShadowState {
    std::size_t param_index = 0;
    DenseMoment m;       // beta1-EMA of g (Adam) or mu-accumulated (Muon)
    DenseMoment v;       // beta2-EMA of g^2 (Adam only)
    DenseMoment h;       // beta2-EMA of |g| (Adam only)
    Matrix prev_error;   // m_{t-1} - reconstruct_{t-1}, for the residual
};

double tangent_residual(const Matrix& g, const Matrix& pb, const Matrix& pa) {
    // (I - P_B) g (I - P_A) without forming the complements
    const Matrix pbg = matmul(pb, g);
    Matrix t = add_scaled(1.0, g, -1.0, pbg);            // (I-P_B) g
    t = add_scaled(1.0, t, -1.0, matmul(t, pa));         // ... (I-P_A)
    return frobenius_norm(t);
}

// Drop entries recorded for a step that did not complete.
void truncate_series(ShadowSeries& s, std::size_t steps) {
    const auto shrink = [steps](std::vector<double>& v) {
        if (v.size() > steps) v.resize(steps);
    };
    shrink(s.e_m);
    shrink(s.e_v);
    shrink(s.delta_subspace);
    shrink(s.delta_tangent);
    shrink(s.resid_m);
    shrink(s.delta_m_eff);
    shrink(s.delta_v_eff);
    shrink(s.popoviciu);
    shrink(s.g_fro);
    shrink(s.g_inf);
    shrink(s.theta_divergence);
}

} // namespace

RunRecord run_training(Problem& problem, const OptimizerSpec& spec, long steps,
                       bool shadow_oracle, const LrSchedule& schedule) {
    if (steps < 1) throw ArgumentError("run_training: steps must be >= 1");

    const std::vector<ParamSpec>& param_specs = problem.param_specs();
    Optimizer optimizer(spec, param_specs);
    std::vector<Matrix> thetas = problem.initial_params();

    RunRecord record;
    record.seed = spec.seed;
    record.memory = memory_report_for(optimizer);

    const bool adam_family = opt_kind_is_adam_family(spec.kind);
    const double beta1 = spec.adam.beta1;
    const double beta2 = spec.adam.beta2;
    const double mu = spec.muon.momentum;

    // Shadow oracle: dense twins per low-rank parameter, plus a free-running
    // dense optimizer for the informational trajectory-divergence series.
    std::vector<ShadowState> shadows;
    std::unique_ptr<Optimizer> free_twin;
    std::vector<Matrix> twin_thetas;
    const bool shadow_active = shadow_oracle && opt_kind_is_low_rank(spec.kind);
    if (shadow_active) {
        for (std::size_t i = 0; i < optimizer.param_count(); ++i) {
            if (optimizer.routes()[i] != Route::low_rank) continue;
            ShadowState s;
            s.param_index = i;
            const int p = param_specs[i].rows(), q = param_specs[i].cols();
            s.m = DenseMoment{Matrix(p, q)};
            s.v = DenseMoment{Matrix(p, q)};
            s.h = DenseMoment{Matrix(p, q)};
            s.prev_error = Matrix(p, q);
            shadows.push_back(std::move(s));
            ShadowSeries series;
            series.param = param_specs[i].name;
            record.shadow.push_back(std::move(series));
        }
        OptimizerSpec dense_spec = spec;
        dense_spec.kind = adam_family ? OptKind::adam : OptKind::muon;
        free_twin = std::make_unique<Optimizer>(dense_spec, param_specs);
        twin_thetas = problem.initial_params();
    }

    for (long step = 1; step <= steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();

        const double loss = problem.loss(thetas);
        if (!std::isfinite(loss)) {
            record.aborted = true;
            record.abort_reason = "non-finite loss at step " + std::to_string(step);
            break;
        }
        const std::vector<Matrix> grads = problem.grads(thetas, step);

        double grad_sq = 0.0;
        for (const Matrix& g : grads) {
            const double f = frobenius_norm(g);
            grad_sq += f * f;
        }

        // Shadow measurements before the optimizer advances its factors.
        for (std::size_t si = 0; si < shadows.size(); ++si) {
            ShadowState& tw = shadows[si];
            ShadowSeries& out = record.shadow[si];
            const Matrix& g = grads[tw.param_index];
            const OptimizerSlot& slot = optimizer.slot(tw.param_index);

            const Matrix pa = projection_row(slot.m_lr);
            const Matrix pb = projection_col(slot.m_lr);
            Matrix lit = add_scaled(1.0, g, -1.0, matmul(pb, g));
            lit = add_scaled(1.0, lit, -1.0, matmul(g, pa));
            out.delta_subspace.push_back(frobenius_norm(lit));
            out.delta_tangent.push_back(tangent_residual(g, pb, pa));
            out.g_fro.push_back(frobenius_norm(g));
            out.g_inf.push_back(max_abs(g));

            if (adam_family) {
                const Matrix m_eff = effective_first_moment(slot.m_lr, g, beta1);
                const Matrix v_eff = effective_second_moment(slot.v_lr, g, beta2);
                tw.m = dense_ema_update(tw.m, g, beta1, false);
                tw.v = dense_ema_update(tw.v, g, beta2, true);
                tw.h = dense_ema_update(tw.h, abs_elementwise(g), beta2, false);
                out.delta_m_eff.push_back(
                    frobenius_norm(add_scaled(1.0, tw.m.value, -1.0, m_eff)));
                out.delta_v_eff.push_back(
                    frobenius_norm(add_scaled(1.0, tw.v.value, -1.0, v_eff)));
                out.popoviciu.push_back(frobenius_norm(
                    add_scaled(1.0, tw.v.value, -1.0, hadamard_square(tw.h.value))));
            } else {
                tw.m.value = add_scaled(mu, tw.m.value, 1.0, g);
            }
        }

        const double lr_scale = schedule.multiplier(step, steps);
        try {
            optimizer.step(thetas, grads, lr_scale);
        } catch (const NumericError& e) {
            record.aborted = true;
            record.abort_reason = e.what();
            for (ShadowSeries& s : record.shadow)
                truncate_series(s, static_cast<std::size_t>(record.steps));
            break;
        }

        // Post-update reconstruction errors and the recursion residual.
        for (std::size_t si = 0; si < shadows.size(); ++si) {
            ShadowState& tw = shadows[si];
            ShadowSeries& out = record.shadow[si];
            const OptimizerSlot& slot = optimizer.slot(tw.param_index);
            const Matrix error = add_scaled(1.0, tw.m.value, -1.0, reconstruct(slot.m_lr));
            out.e_m.push_back(frobenius_norm(error));
            const double decay = adam_family ? beta1 : mu;
            out.resid_m.push_back(
                frobenius_norm(add_scaled(1.0, error, -decay, tw.prev_error)));
            tw.prev_error = error;
            if (adam_family) {
                out.e_v.push_back(frobenius_norm(
                    add_scaled(1.0, tw.h.value, -1.0, reconstruct(slot.v_lr))));
            } else {
                out.e_v.push_back(0.0);
            }
        }

        if (free_twin) {
            const std::vector<Matrix> twin_grads = problem.grads(twin_thetas, step);
            free_twin->step(twin_thetas, twin_grads, lr_scale);
            for (std::size_t si = 0; si < shadows.size(); ++si) {
                const std::size_t pi = shadows[si].param_index;
                record.shadow[si].theta_divergence.push_back(frobenius_norm(
                    add_scaled(1.0, thetas[pi], -1.0, twin_thetas[pi])));
            }
        }

        const auto t1 = std::chrono::steady_clock::now();
        const double us =
            std::chrono::duration<double, std::micro>(t1 - t0).count();
        record.total_wall_us += us;
        record.loss.push_back(loss);
        record.grad_norm.push_back(std::sqrt(grad_sq));
        record.wall_us.push_back(us);
        record.steps += 1;
    }

    if (!record.aborted) {
        record.final_loss = problem.loss(thetas);
    } else if (!record.loss.empty()) {
        record.final_loss = record.loss.back();
    }
    return record;
}

} // namespace lorapre
