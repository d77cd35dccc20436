#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

#include "nutaxis/diagnostics.hpp"
#include "nutaxis/errors.hpp"
#include "nutaxis/model.hpp"
#include "nutaxis/solver.hpp"

namespace nutaxis {

struct RunHooks {
    // Called at every sample (initial state, each cadence point, final state)
    // with a snapshot of the state.
    std::function<void(const SimState&)> observer;
    const SourceTerms* sources = nullptr;
    // Prediction used for residual columns. If absent and auto_predict is set,
    // one is derived from the initial data; parameter regimes without a proven
    // limit simply leave the residual columns NaN.
    std::optional<EquilibriumPrediction> prediction;
    bool auto_predict = true;
};

namespace detail {

inline void append_sample(DiagnosticsRecord& rec, const SimState& s, const ModelParams& p,
                          const std::optional<EquilibriumPrediction>& pred) {
    const Grid& g = s.u.grid;
    const double volume = g.cell_volume * static_cast<double>(g.cell_count);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    rec.times.push_back(s.t);
    const double a = integrate(s.u) / volume;
    const double b = integrate(s.v) / volume;
    rec.a.push_back(a);
    rec.b.push_back(b);
    rec.combined.push_back(a + p.xi * b);
    rec.u_linf.push_back(lp_norm(s.u, std::numeric_limits<double>::infinity()));
    rec.v_linf.push_back(lp_norm(s.v, std::numeric_limits<double>::infinity()));

    double gmax = 0.0;
    {
        const GradSq gs = center_grad_sq(s.v);
        for (double m2 : gs.mag2.values) gmax = std::max(gmax, m2);
        gmax = std::sqrt(gmax);
    }
    rec.grad_v_linf.push_back(gmax);

    std::int64_t floored = 0;
    rec.energy_E.push_back(energy_E(s, p, &floored));
    rec.floored_cells_max = std::max(rec.floored_cells_max, floored);
    rec.lyapunov_F.push_back(lyapunov_F(s, p));

    if (!std::isfinite(rec.u_linf.back()) || !std::isfinite(rec.v_linf.back()))
        throw SolveError("run: state became non-finite at t=" + std::to_string(s.t));

    double res_u = nan, res_v = nan;
    if (pred) {
        if (pred->u_limit) {
            const double target = *pred->u_limit;
            NeumaierSum acc;
            for (double x : s.u.values) acc.add((x - target) * (x - target));
            res_u = std::sqrt(acc.value() * g.cell_volume);
        }
        if (std::holds_alternative<double>(pred->v_limit)) {
            const double target = std::get<double>(pred->v_limit);
            double m = 0.0;
            for (double x : s.v.values) m = std::max(m, std::abs(x - target));
            res_v = m;
        }
    }
    rec.res_u.push_back(res_u);
    rec.res_v.push_back(res_v);
}

} // namespace detail

// Advance s0 to ctl.t_end with dt from stable_dt, sampling diagnostics every
// output_cadence time units. One dt-halving retry is attempted when a step
// trips the negativity guard; a second failure (or dt_min) propagates.
// The trajectory is deterministic for fixed inputs.
inline DiagnosticsRecord run(SimState s, const ModelParams& p, const StepControl& ctl,
                             const RunHooks& hooks = {}) {
    validate(p);
    validate(ctl);
    validate(s);

    std::optional<EquilibriumPrediction> pred = hooks.prediction;
    if (!pred && hooks.auto_predict) {
        try {
            pred = predict_equilibrium(p, s.u, s.v);
        } catch (const NotPredictedError&) {
            pred.reset();
        }
    }

    DiagnosticsRecord rec;
    auto sample = [&](const SimState& st) {
        detail::append_sample(rec, st, p, pred);
        if (hooks.observer) hooks.observer(st);
    };

    const double t_end = ctl.t_end;
    sample(s);
    if (t_end <= s.t) return rec;

    const double cadence = ctl.output_cadence > 0.0 ? ctl.output_cadence : 0.0;
    const double t0 = s.t;
    std::int64_t next_k = 1;
    const double eps_end = 1e-12 * std::max(1.0, std::abs(t_end));

    const bool fit_rate_applies =
        pred && pred->decay_rate_lower_bound && std::holds_alternative<double>(pred->v_limit);

    while (s.t < t_end - eps_end) {
        double target = t_end;
        if (cadence > 0.0) {
            const double t_next = t0 + static_cast<double>(next_k) * cadence;
            target = std::min(target, t_next);
        }
        double dt = stable_dt(s, p, ctl);
        bool hits_target = false;
        if (s.t + dt >= target - eps_end) {
            dt = target - s.t;
            hits_target = true;
        }

        StepStats stats;
        SimState next;
        try {
            next = step(s, dt, p, hooks.sources, &stats);
        } catch (const CflError&) {
            ++rec.dt_retries;
            const double half = 0.5 * dt;
            if (half < ctl.dt_min) throw;
            next = step(s, half, p, hooks.sources, &stats);
            dt = half;
            hits_target = false;
        }

        rec.steps += 1;
        rec.min_dt_used = std::min(rec.min_dt_used, dt);
        rec.max_dt_used = std::max(rec.max_dt_used, dt);
        if (stats.pre_clamp_min_u < 0.0) {
            double scale = 0.0;
            for (double x : s.u.values) scale = std::max(scale, x);
            if (scale > 0.0)
                rec.worst_pre_clamp_u_rel =
                    std::max(rec.worst_pre_clamp_u_rel, -stats.pre_clamp_min_u / scale);
        }
        if (stats.pre_clamp_min_v < 0.0) {
            double scale = 0.0;
            for (double x : s.v.values) scale = std::max(scale, x);
            if (scale > 0.0)
                rec.worst_pre_clamp_v_rel =
                    std::max(rec.worst_pre_clamp_v_rel, -stats.pre_clamp_min_v / scale);
        }
        rec.clamped_cells += stats.clamped_u + stats.clamped_v;

        s = std::move(next);

        if (hits_target) {
            if (cadence > 0.0 && s.t < t_end - eps_end) {
                sample(s);
                ++next_k;
            }
        }
    }
    sample(s);
    if (fit_rate_applies) rec.fitted_decay_rate = fit_decay_after_settling(rec);
    return rec;
}

} // namespace nutaxis
