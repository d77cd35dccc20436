#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nutaxis/errors.hpp"
#include "nutaxis/grid.hpp"
#include "nutaxis/model.hpp"
#include "nutaxis/solver.hpp"

namespace nutaxis {

// Floor for 1/v and ln v evaluations; cells at the floor contribute their
// floored value and are counted.
inline constexpr double kVFloor = 1e-12;

// Time series of masses, norms and energies sampled along a run, plus the
// scalar health counters of the stepping loop.
struct DiagnosticsRecord {
    std::vector<double> times;
    std::vector<double> a;           // mean of u
    std::vector<double> b;           // mean of v
    std::vector<double> combined;    // a + xi b
    std::vector<double> u_linf;
    std::vector<double> v_linf;
    std::vector<double> grad_v_linf;
    std::vector<double> energy_E;
    std::vector<double> lyapunov_F;
    std::vector<double> res_u; // ||u - u_limit||_L2 (NaN without a prediction)
    std::vector<double> res_v; // ||v - v_limit||_inf (NaN without a point limit)
    std::optional<double> fitted_decay_rate;

    // stepping health (whole-run scalars)
    std::int64_t steps = 0;
    std::int64_t dt_retries = 0;
    double min_dt_used = std::numeric_limits<double>::infinity();
    double max_dt_used = 0.0;
    double worst_pre_clamp_u_rel = 0.0; // max over steps of -min_u / ||u||_inf
    double worst_pre_clamp_v_rel = 0.0;
    std::int64_t clamped_cells = 0;
    std::int64_t floored_cells_max = 0;

    std::size_t size() const { return times.size(); }
};

namespace detail {

inline double xlogx(double u) { return u > 0.0 ? u * std::log(u) : 0.0; }

struct GradSq {
    Field mag2; // |grad|^2 at centers (face averages)
};

inline GradSq center_grad_sq(const Field& f) {
    const Grid& g = f.grid;
    const FaceFlux q = grad_faces(f);
    GradSq out{Field(g)};
    const auto cs = g.strides();
    for (index_t i0 = 0; i0 < g.cells[0]; ++i0)
        for (index_t i1 = 0; i1 < g.cells[1]; ++i1)
            for (index_t i2 = 0; i2 < g.cells[2]; ++i2) {
                const auto grad = center_gradient(q, i0, i1, i2);
                double s = 0.0;
                for (int a = 0; a < g.dim; ++a) s += grad[a] * grad[a];
                out.mag2[i0 * cs[0] + i1 * cs[1] + i2 * cs[2]] = s;
            }
    return out;
}

} // namespace detail

// Dissipated quantity int( |grad v|^2 / (2 v) + u ln(u) / chi ). Gradients are
// face differences averaged to centers; v is floored at kVFloor.
inline double energy_E(const SimState& s, const ModelParams& p,
                       std::int64_t* floored_cells = nullptr) {
    const detail::GradSq gs = detail::center_grad_sq(s.v);
    detail::NeumaierSum acc;
    std::int64_t floored = 0;
    for (index_t i = 0; i < s.v.size(); ++i) {
        double v = s.v[i];
        if (v < kVFloor) {
            v = kVFloor;
            ++floored;
        }
        acc.add(0.5 * gs.mag2[i] / v + detail::xlogx(s.u[i]) / p.chi);
    }
    if (floored_cells) *floored_cells = floored;
    return acc.value() * s.u.grid.cell_volume;
}

// int( u + xi (v - 1 - ln v) ). The v-part is pointwise nonnegative; tiny
// negative round-off near v = 1 is clamped, anything larger is a logic error.
inline double lyapunov_F(const SimState& s, const ModelParams& p) {
    detail::NeumaierSum acc;
    for (index_t i = 0; i < s.v.size(); ++i) {
        const double v = std::max(s.v[i], kVFloor);
        double well = (v - 1.0) - std::log(v);
        if (well < 0.0) {
            if (well < -1e-12)
                throw Error("lyapunov_F: v - 1 - ln v went negative (v=" + std::to_string(v) + ")");
            well = 0.0;
        }
        acc.add(s.u[i] + p.xi * well);
    }
    return acc.value() * s.u.grid.cell_volume;
}

struct MassReport {
    bool conservation_applies = false; // mu = rho = 0, eps = 0
    double max_rel_drift = 0.0;        // of a + xi b against its initial value
    bool a_monotone_applies = false;   // rho = 0, eps = 0: a nondecreasing
    double max_a_decrease = 0.0;
    bool b_monotone_applies = false;   // mu = 0: b nonincreasing
    double max_b_increase = 0.0;
};

inline MassReport mass_identities(const DiagnosticsRecord& rec, const ModelParams& p) {
    MassReport r;
    if (rec.size() == 0) return r;
    r.conservation_applies = (p.mu == 0.0 && p.rho == 0.0 && p.eps_reg == 0.0);
    r.a_monotone_applies = (p.rho == 0.0 && p.eps_reg == 0.0);
    r.b_monotone_applies = (p.mu == 0.0);

    const double ref = rec.combined.front();
    const double scale = std::max(std::abs(ref), std::numeric_limits<double>::min());
    for (std::size_t i = 0; i < rec.size(); ++i)
        r.max_rel_drift = std::max(r.max_rel_drift, std::abs(rec.combined[i] - ref) / scale);
    for (std::size_t i = 1; i < rec.size(); ++i) {
        r.max_a_decrease = std::max(r.max_a_decrease, rec.a[i - 1] - rec.a[i]);
        r.max_b_increase = std::max(r.max_b_increase, rec.b[i] - rec.b[i - 1]);
    }
    return r;
}

enum class VerdictStatus { Pass, Fail, Inconclusive };

inline std::string to_string(VerdictStatus v) {
    switch (v) {
        case VerdictStatus::Pass: return "PASS";
        case VerdictStatus::Fail: return "FAIL";
        default: return "INCONCLUSIVE";
    }
}

struct ConvergenceTolerances {
    double res_v = 1e-3;       // ||v - v_limit||_inf over the tail
    double res_u = 1e-2;       // ||u - u_limit||_L2 over the tail
    double u_inf = 1e-4;       // ||u||_inf over the tail (limits at zero)
    double b_variation = 1e-4; // tail variation of mean v (interval targets)
};

struct ConvergenceVerdict {
    VerdictStatus status = VerdictStatus::Inconclusive;
    double tail_res_v_max = std::numeric_limits<double>::quiet_NaN();
    double tail_res_u_max = std::numeric_limits<double>::quiet_NaN();
    double tail_u_inf_max = std::numeric_limits<double>::quiet_NaN();
    double tail_b_variation = std::numeric_limits<double>::quiet_NaN();
    double final_b = std::numeric_limits<double>::quiet_NaN();
    std::string detail;
};

// Judges the trailing tail_fraction of a run against the predicted limit:
// residuals must sit below tolerance over the whole tail and must not grow
// across it. Interval predictions are judged by stabilization of mean v plus
// strict membership.
inline ConvergenceVerdict convergence_check(const DiagnosticsRecord& rec,
                                            const EquilibriumPrediction& pred,
                                            double tail_fraction,
                                            const ConvergenceTolerances& tol = {}) {
    ConvergenceVerdict out;
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
        throw Error("convergence_check: tail_fraction must be in (0,1)");
    const std::size_t n = rec.size();
    const std::size_t tail_n = static_cast<std::size_t>(std::floor(tail_fraction * n));
    if (tail_n < 10) {
        out.detail = "run too short: fewer than 10 samples in the tail";
        return out;
    }
    const std::size_t first = n - tail_n;

    auto tail_max = [&](const std::vector<double>& s) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = first; i < n; ++i) m = std::max(m, s[i]);
        return m;
    };
    auto nonincreasing_across = [&](const std::vector<double>& s) {
        return s[n - 1] <= s[first] + 1e-14 * std::max(1.0, std::abs(s[first]));
    };

    const bool point_v = std::holds_alternative<double>(pred.v_limit);
    bool pass = true;
    std::string why;

    if (point_v) {
        out.tail_res_v_max = tail_max(rec.res_v);
        if (!(out.tail_res_v_max <= tol.res_v)) {
            pass = false;
            why += "res_v above tolerance; ";
        }
        if (!nonincreasing_across(rec.res_v)) {
            pass = false;
            why += "res_v growing across tail; ";
        }
    } else {
        // interval target: mean v must stabilize strictly inside it
        const ValueInterval iv = std::get<ValueInterval>(pred.v_limit);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = first; i < n; ++i) {
            lo = std::min(lo, rec.b[i]);
            hi = std::max(hi, rec.b[i]);
        }
        out.tail_b_variation = hi - lo;
        out.final_b = rec.b[n - 1];
        if (!(out.tail_b_variation <= tol.b_variation)) {
            pass = false;
            why += "mean v not stabilized; ";
        }
        if (!(out.final_b > iv.lo && out.final_b < iv.hi)) {
            pass = false;
            why += "mean v limit outside predicted interval; ";
        }
    }

    if (pred.u_limit && *pred.u_limit != 0.0) {
        out.tail_res_u_max = tail_max(rec.res_u);
        if (!(out.tail_res_u_max <= tol.res_u)) {
            pass = false;
            why += "res_u above tolerance; ";
        }
        if (!nonincreasing_across(rec.res_u)) {
            pass = false;
            why += "res_u growing across tail; ";
        }
    } else if (pred.u_limit) {
        out.tail_u_inf_max = tail_max(rec.u_linf);
        if (!(out.tail_u_inf_max <= tol.u_inf)) {
            pass = false;
            why += "u_linf above tolerance; ";
        }
        if (!nonincreasing_across(rec.u_linf)) {
            pass = false;
            why += "u_linf growing across tail; ";
        }
    }

    out.status = pass ? VerdictStatus::Pass : VerdictStatus::Fail;
    out.detail = pass ? "tail residuals within tolerance" : why;
    return out;
}

// Exponential mass-decay fit once v has settled within 1e-2 of its point
// limit; empty when that never happens or mean u is not positive there.
inline std::optional<double> fit_decay_after_settling(const DiagnosticsRecord& rec);

// Least-squares slope of ln a(t) over [t_lo, t_hi], negated.
inline double fit_decay_rate(const DiagnosticsRecord& rec, double t_lo, double t_hi) {
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (rec.times[i] < t_lo || rec.times[i] > t_hi) continue;
        if (!(rec.a[i] > 0.0))
            throw Error("fit_decay_rate: mean u is not positive inside the window");
        ts.push_back(rec.times[i]);
        ys.push_back(std::log(rec.a[i]));
    }
    if (ts.size() < 5) throw Error("fit_decay_rate: window too short (need >= 5 samples)");
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        my += ys[i];
    }
    mt /= static_cast<double>(ts.size());
    my /= static_cast<double>(ts.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        num += (ts[i] - mt) * (ys[i] - my);
        den += (ts[i] - mt) * (ts[i] - mt);
    }
    if (!(den > 0.0)) throw Error("fit_decay_rate: degenerate time window");
    return -num / den;
}

inline std::optional<double> fit_decay_after_settling(const DiagnosticsRecord& rec) {
    if (rec.size() <= 10) return std::nullopt;
    double t_lo = -1.0;
    for (std::size_t i = 0; i < rec.size(); ++i)
        if (rec.res_v[i] < 1e-2) {
            t_lo = rec.times[i];
            break;
        }
    if (t_lo < 0.0 || t_lo >= rec.times.back()) return std::nullopt;
    try {
        return fit_decay_rate(rec, t_lo, rec.times.back());
    } catch (const Error&) {
        return std::nullopt;
    }
}

// Both sides of the pointwise-gradient inequality
//   int |grad v|^4 / v^3  <=  (2 + sqrt(dim))^2 int v |D^2 ln v|^2,
// the Hessian taken by nested centered differences with mirrored ghosts.
// Returns (lhs, rhs) with the constant folded into rhs.
inline std::pair<double, double> functional_inequality_26(const Field& v) {
    const Grid& g = v.grid;
    for (double x : v.values)
        if (!(x > kVFloor))
            throw Error("functional_inequality_26: v must exceed the positivity floor");

    const detail::GradSq gs = detail::center_grad_sq(v);
    detail::NeumaierSum lhs;
    for (index_t i = 0; i < v.size(); ++i)
        lhs.add(gs.mag2[i] * gs.mag2[i] / (v[i] * v[i] * v[i]));

    Field w(g);
    for (index_t i = 0; i < v.size(); ++i) w[i] = std::log(v[i]);

    const auto cs = g.strides();
    // mirrored-ghost fetch of w at an offset position
    auto wat = [&](std::array<index_t, 3> pos) {
        for (int a = 0; a < g.dim; ++a) {
            if (pos[a] < 0) pos[a] = -pos[a] - 1;
            if (pos[a] >= g.cells[a]) pos[a] = 2 * g.cells[a] - pos[a] - 1;
        }
        return w[pos[0] * cs[0] + pos[1] * cs[1] + pos[2] * cs[2]];
    };

    detail::NeumaierSum rhs;
    for (index_t i0 = 0; i0 < g.cells[0]; ++i0)
        for (index_t i1 = 0; i1 < g.cells[1]; ++i1)
            for (index_t i2 = 0; i2 < g.cells[2]; ++i2) {
                const std::array<index_t, 3> c{i0, i1, i2};
                double frob = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    for (int bt = 0; bt < g.dim; ++bt) {
                        double second;
                        if (a == bt) {
                            std::array<index_t, 3> lo = c, hi = c;
                            lo[a] -= 1;
                            hi[a] += 1;
                            second = (wat(lo) - 2.0 * wat(c) + wat(hi)) /
                                     (g.spacing[a] * g.spacing[a]);
                        } else {
                            std::array<index_t, 3> pp = c, pm = c, mp = c, mm = c;
                            pp[a] += 1; pp[bt] += 1;
                            pm[a] += 1; pm[bt] -= 1;
                            mp[a] -= 1; mp[bt] += 1;
                            mm[a] -= 1; mm[bt] -= 1;
                            second = (wat(pp) - wat(pm) - wat(mp) + wat(mm)) /
                                     (4.0 * g.spacing[a] * g.spacing[bt]);
                        }
                        frob += second * second;
                    }
                }
                rhs.add(v[c[0] * cs[0] + c[1] * cs[1] + c[2] * cs[2]] * frob);
            }

    const double cdim = 2.0 + std::sqrt(static_cast<double>(g.dim));
    return {lhs.value() * g.cell_volume, cdim * cdim * rhs.value() * g.cell_volume};
}

struct BoundednessReport {
    double max_u_linf = 0.0;
    double max_v_linf = 0.0;
    double max_grad_v_linf = 0.0;
    bool growth_flag_u = false;
    bool growth_flag_v = false;
    bool growth_flag_grad_v = false;
    bool growth_flag() const { return growth_flag_u || growth_flag_v || growth_flag_grad_v; }
};

// Running maxima plus a crude unbounded-growth heuristic: the last tenth of
// the run exceeding the first tenth by 10x raises a flag.
inline BoundednessReport boundedness_monitor(const DiagnosticsRecord& rec) {
    BoundednessReport rep;
    const std::size_t n = rec.size();
    if (n == 0) return rep;
    const std::size_t dec = std::max<std::size_t>(1, n / 10);
    auto scan = [&](const std::vector<double>& s, double& overall, bool& flag) {
        double first = 0.0, last = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            overall = std::max(overall, s[i]);
            if (i < dec) first = std::max(first, s[i]);
            if (i >= n - dec) last = std::max(last, s[i]);
        }
        flag = first > 0.0 ? last > 10.0 * first : last > 1e-12;
    };
    scan(rec.u_linf, rep.max_u_linf, rep.growth_flag_u);
    scan(rec.v_linf, rep.max_v_linf, rep.growth_flag_v);
    scan(rec.grad_v_linf, rep.max_grad_v_linf, rep.growth_flag_grad_v);
    return rep;
}

struct EnergyRegression {
    double early_max = 0.0;
    double overall_max = 0.0;
    double margin = 0.0;
    bool within = true;
};

// Regression-style boundedness of the energy: the whole-run supremum must not
// exceed the early-run supremum by more than an additive margin. The gradient
// part dissipates, but the entropy part sits in [-1/e, ...] per cell and may
// recover toward zero, so the margin includes the well depth |Omega|/(e chi).
inline EnergyRegression energy_regression(const DiagnosticsRecord& rec, double chi, double volume,
                                          double early_fraction = 0.1,
                                          double margin_rel = 0.05) {
    EnergyRegression out;
    const std::size_t n = rec.size();
    if (n < 3) return out;
    const std::size_t ne = std::max<std::size_t>(2, static_cast<std::size_t>(early_fraction * n));
    double early = -std::numeric_limits<double>::infinity();
    double overall = early;
    double escale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        overall = std::max(overall, rec.energy_E[i]);
        if (i < ne) {
            early = std::max(early, rec.energy_E[i]);
            escale = std::max(escale, std::abs(rec.energy_E[i]));
        }
    }
    out.early_max = early;
    out.overall_max = overall;
    out.margin = volume / (std::exp(1.0) * chi) + margin_rel * std::max(escale, 1e-6);
    out.within = overall <= early + out.margin;
    return out;
}

} // namespace nutaxis
