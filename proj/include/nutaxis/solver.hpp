#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nutaxis/errors.hpp"
#include "nutaxis/grid.hpp"
#include "nutaxis/model.hpp"

namespace nutaxis {

// Instantaneous solver state. u and v live on the same grid and stay
// cellwise nonnegative across accepted steps.
struct SimState {
    Field u;
    Field v;
    double t = 0.0;
};

inline void validate(const SimState& s) {
    if (s.u.grid != s.v.grid) throw Error("SimState: u and v must share one grid");
    for (double x : s.u.values)
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error("SimState: u must be finite and >= 0");
    for (double x : s.v.values)
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error("SimState: v must be finite and >= 0");
    if (!(s.t >= 0.0)) throw Error("SimState: t must be >= 0");
}

struct StepControl {
    double cfl_safety = 0.9;
    double dt_min = 1e-12;
    double dt_max = 0.1;
    double t_end = 1.0;
    double output_cadence = 0.0; // <= 0: only the initial and final samples
};

inline void validate(const StepControl& c) {
    for (double v : {c.cfl_safety, c.dt_min, c.dt_max, c.t_end, c.output_cadence})
        if (std::isnan(v)) throw Error("time: control values must not be NaN");
    if (!(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0))
        throw Error("time.cfl_safety must be in (0, 1]");
    if (!(c.dt_min > 0.0)) throw Error("time.dt_min must be > 0");
    if (!(c.dt_max >= c.dt_min) || std::isinf(c.dt_max))
        throw Error("time.dt_max must be finite and >= dt_min");
    if (!(c.t_end >= 0.0) || std::isinf(c.t_end)) throw Error("time.t_end must be finite and >= 0");
}

// Optional forcing, used by manufactured-solution tests only.
struct SourceTerms {
    std::function<double(const std::array<double, 3>&, double)> u;
    std::function<double(const std::array<double, 3>&, double)> v;
    bool any() const { return static_cast<bool>(u) || static_cast<bool>(v); }
};

struct StepStats {
    double pre_clamp_min_u = 0.0; // most negative value before clamping
    double pre_clamp_min_v = 0.0;
    std::int64_t clamped_u = 0;
    std::int64_t clamped_v = 0;
    int cg_iterations = 0;
};

// Pre-clamp negativity beyond this fraction of the field's sup norm aborts
// the step as a CFL violation; smaller excursions are clamped to zero.
inline constexpr double kNegativityTol = 1e-13;

// Relative residual target of the implicit diffusion solve.
inline constexpr double kCgRelTol = 1e-12;
inline constexpr int kCgMaxIter = 512;

namespace detail {

inline double pow_m(double u, double m) {
    if (m == 2.0) return u * u;
    if (m == 3.0) return u * u * u;
    if (m == 1.5) return u * std::sqrt(u);
    return std::pow(u, m);
}

// y = x - dt * lap_N(x), the backward-Euler diffusion operator with mirrored
// ghost cells. Symmetric positive definite on the cell lattice.
inline void apply_helmholtz(const Grid& g, double dt, const std::vector<double>& x,
                            std::vector<double>& y) {
    const auto cs = g.strides();
    std::array<double, 3> inv_h2{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) inv_h2[a] = 1.0 / (g.spacing[a] * g.spacing[a]);
    for (index_t i0 = 0; i0 < g.cells[0]; ++i0)
        for (index_t i1 = 0; i1 < g.cells[1]; ++i1)
            for (index_t i2 = 0; i2 < g.cells[2]; ++i2) {
                const index_t c = i0 * cs[0] + i1 * cs[1] + i2 * cs[2];
                const std::array<index_t, 3> pos{i0, i1, i2};
                double lap = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    const double xc = x[static_cast<std::size_t>(c)];
                    const double xl = pos[a] > 0 ? x[static_cast<std::size_t>(c - cs[a])] : xc;
                    const double xr = pos[a] + 1 < g.cells[a]
                                          ? x[static_cast<std::size_t>(c + cs[a])]
                                          : xc;
                    lap += ((xl - xc) + (xr - xc)) * inv_h2[a];
                }
                y[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] - dt * lap;
            }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    NeumaierSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
    return s.value();
}

inline double mean_of(const std::vector<double>& a) {
    NeumaierSum s;
    for (double v : a) s.add(v);
    return s.value() / static_cast<double>(a.size());
}

// Conjugate gradient for (I - dt lap_N) x = b, started from x = b. Returns the
// iteration count. The exact solve preserves the discrete mean of b; the small
// CG residual does not, so the mean is restored afterwards to keep the
// per-step mass identity of v closed to round-off.
inline int cg_solve_helmholtz(const Grid& g, double dt, const std::vector<double>& b,
                              std::vector<double>& x, double rel_tol = kCgRelTol,
                              int max_iter = kCgMaxIter) {
    const std::size_t n = b.size();
    x = b;
    std::vector<double> r(n), p(n), ap(n);
    apply_helmholtz(g, dt, x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double rr = dot(r, r);
    const double bb = dot(b, b);
    const double tol2 = rel_tol * rel_tol * std::max(bb, std::numeric_limits<double>::min());
    int it = 0;
    if (rr > tol2) {
        p = r;
        for (it = 1; it <= max_iter; ++it) {
            apply_helmholtz(g, dt, p, ap);
            const double pap = dot(p, ap);
            if (!(pap > 0.0))
                throw SolveError("cg_solve_helmholtz: operator lost positive definiteness");
            const double alpha = rr / pap;
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
            for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
            const double rr_new = dot(r, r);
            if (rr_new <= tol2) {
                rr = rr_new;
                break;
            }
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
            if (it == max_iter)
                throw SolveError("cg_solve_helmholtz: no convergence in " +
                                 std::to_string(max_iter) + " iterations");
        }
    }
    const double shift = mean_of(b) - mean_of(x);
    for (double& v : x) v += shift;
    return it;
}

} // namespace detail

// Donor-cell taxis flux chi * u_upwind * (dv across face). The sign of the
// face gradient of v picks the cell the flux leaves.
inline FaceFlux taxis_flux(const Field& u, const Field& v, double chi) {
    if (u.grid != v.grid) throw Error("taxis_flux: u and v grids differ");
    const Grid& g = u.grid;
    FaceFlux q(g);
    const auto cs = g.strides();
    for (int a = 0; a < g.dim; ++a) {
        const detail::FaceIndexer fi(g, a);
        const double inv_h = 1.0 / g.spacing[a];
        std::array<index_t, 3> n = g.cells;
        n[a] -= 1;
        for (index_t i0 = 0; i0 < n[0]; ++i0)
            for (index_t i1 = 0; i1 < n[1]; ++i1)
                for (index_t i2 = 0; i2 < n[2]; ++i2) {
                    const std::array<index_t, 3> c{i0, i1, i2};
                    const index_t left = c[0] * cs[0] + c[1] * cs[1] + c[2] * cs[2];
                    const index_t right = left + cs[a];
                    std::array<index_t, 3> fpos = c;
                    fpos[a] += 1;
                    const double dv = (v[right] - v[left]) * inv_h;
                    const double donor = dv > 0.0 ? u[left] : u[right];
                    q.axis[a][static_cast<std::size_t>(
                        detail::face_flat(fi, fpos[0], fpos[1], fpos[2]))] = chi * donor * dv;
                }
    }
    return q;
}

// Face gradient of the scalar eps*u + u^m: u^m is formed cellwise first so the
// flux matches the divergence structure of the nonlinear diffusion term.
inline FaceFlux diffusive_flux_u(const Field& u, const ModelParams& p) {
    Field phi(u.grid);
    for (index_t i = 0; i < u.size(); ++i)
        phi[i] = p.eps_reg * u[i] + detail::pow_m(u[i], p.m);
    return grad_faces(phi);
}

// Explicit-step bound: cfl * min_a h_a^2 / (2 dim D + 2 dim h_a V) with
// D = eps + m (max u)^(m-1) and V = chi max|grad v|, clamped to
// [dt_min, dt_max].
inline double stable_dt(const SimState& s, const ModelParams& p, const StepControl& ctl) {
    const Grid& g = s.u.grid;
    double umax = 0.0;
    for (double x : s.u.values) umax = std::max(umax, x);
    const double diff = p.eps_reg + p.m * detail::pow_m(umax, p.m - 1.0);
    const double vmax = p.chi * max_abs(grad_faces(s.v));

    double dt = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim; ++a) {
        const double h = g.spacing[a];
        const double denom = 2.0 * g.dim * diff + 2.0 * g.dim * h * vmax;
        if (denom > 0.0) dt = std::min(dt, h * h / denom);
    }
    dt = std::isinf(dt) ? ctl.dt_max : ctl.cfl_safety * dt;
    return std::clamp(dt, ctl.dt_min, ctl.dt_max);
}

// One IMEX update:
//   (a) u: fully explicit conservative flux-form update plus explicit reaction,
//   (b) v: backward-Euler diffusion around the explicit reaction, solved
//       matrix-free by conjugate gradient.
// Both reactions are evaluated on the pre-step state so the combined mass
// identity d/dt int(u + xi v) closes to round-off (see mass_identities).
// Negative values within kNegativityTol * sup-norm are clamped to zero and
// counted; anything beyond aborts the step with CflError.
inline SimState step(const SimState& s, double dt, const ModelParams& p,
                     const SourceTerms* src = nullptr, StepStats* stats = nullptr) {
    if (!(dt > 0.0)) throw Error("step: dt must be positive");
    const Grid& g = s.u.grid;

    FaceFlux flux = diffusive_flux_u(s.u, p);
    {
        const FaceFlux tax = taxis_flux(s.u, s.v, p.chi);
        for (int a = 0; a < g.dim; ++a)
            for (std::size_t i = 0; i < flux.axis[a].size(); ++i)
                flux.axis[a][i] -= tax.axis[a][i];
    }
    const Field div = div_faces(flux);

    double linf_u = 0.0, linf_v = 0.0;
    for (double x : s.u.values) linf_u = std::max(linf_u, x);
    for (double x : s.v.values) linf_v = std::max(linf_v, x);

    SimState out;
    out.t = s.t + dt;
    out.u = Field(g);
    out.v = Field(g);

    const bool have_src_u = src && src->u;
    const bool have_src_v = src && src->v;

    double min_u = 0.0;
    for (index_t i = 0; i < g.cell_count; ++i) {
        double rate = div[i] + reaction_u(s.u[i], s.v[i], p);
        if (have_src_u) rate += src->u(g.cell_center(i), s.t);
        const double val = s.u[i] + dt * rate;
        out.u[i] = val;
        min_u = std::min(min_u, val);
    }
    if (min_u < -kNegativityTol * linf_u)
        throw CflError("step: u dropped to " + std::to_string(min_u) +
                       " (beyond negativity tolerance); dt=" + std::to_string(dt));
    std::int64_t clamped_u = 0;
    if (min_u < 0.0)
        for (double& x : out.u.values)
            if (x < 0.0) {
                x = 0.0;
                ++clamped_u;
            }

    std::vector<double> rhs(static_cast<std::size_t>(g.cell_count));
    for (index_t i = 0; i < g.cell_count; ++i) {
        double rate = reaction_v(s.u[i], s.v[i], p);
        if (have_src_v) rate += src->v(g.cell_center(i), s.t);
        rhs[static_cast<std::size_t>(i)] = s.v[i] + dt * rate;
    }
    const int iters = detail::cg_solve_helmholtz(g, dt, rhs, out.v.values);

    double min_v = 0.0;
    for (double x : out.v.values) min_v = std::min(min_v, x);
    if (min_v < -kNegativityTol * linf_v)
        throw CflError("step: v dropped to " + std::to_string(min_v) +
                       " (beyond negativity tolerance); dt=" + std::to_string(dt));
    std::int64_t clamped_v = 0;
    if (min_v < 0.0)
        for (double& x : out.v.values)
            if (x < 0.0) {
                x = 0.0;
                ++clamped_v;
            }

    if (stats) {
        stats->pre_clamp_min_u = min_u;
        stats->pre_clamp_min_v = min_v;
        stats->clamped_u = clamped_u;
        stats->clamped_v = clamped_v;
        stats->cg_iterations = iters;
    }
    return out;
}

} // namespace nutaxis
