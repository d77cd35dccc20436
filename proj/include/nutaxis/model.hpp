#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include "nutaxis/errors.hpp"
#include "nutaxis/exponent.hpp"
#include "nutaxis/grid.hpp"

namespace nutaxis {

// Coefficients of the coupled system
//   u_t = div(grad(eps u + u^m) - chi u grad v) + xi u v - rho u - eps u^2
//   v_t = lap v - u v + mu v (1 - v)
// eps_reg = 0 gives the unregularized equations.
struct ModelParams {
    double m = 2.0;       // porous-medium exponent, > 1
    double chi = 1.0;     // taxis sensitivity, > 0
    double xi = 0.0;      // nutrient-to-growth conversion rate, >= 0
    double rho = 0.0;     // linear degradation of u, >= 0
    double mu = 0.0;      // logistic rate of v, >= 0
    double eps_reg = 0.0; // regularization strength, >= 0
};

inline void validate(const ModelParams& p) {
    for (double v : {p.m, p.chi, p.xi, p.rho, p.mu, p.eps_reg})
        if (!std::isfinite(v)) throw Error("model: coefficients must be finite");
    if (!(p.m > 1.0)) throw Error("model.m must be > 1");
    if (!(p.chi > 0.0)) throw Error("model.chi must be > 0");
    if (!(p.xi >= 0.0)) throw Error("model.xi must be >= 0");
    if (!(p.rho >= 0.0)) throw Error("model.rho must be >= 0");
    if (!(p.mu >= 0.0)) throw Error("model.mu must be >= 0");
    if (!(p.eps_reg >= 0.0)) throw Error("model.eps_reg must be >= 0");
}

inline double reaction_u(double u_val, double v_val, const ModelParams& p) {
    return p.xi * u_val * v_val - p.rho * u_val - p.eps_reg * u_val * u_val;
}

inline double reaction_v(double u_val, double v_val, const ModelParams& p) {
    return -u_val * v_val + p.mu * v_val * (1.0 - v_val);
}

// Coefficient regimes: (I) xi*mu = 0, rho >= 0; (II) xi*mu*rho > 0;
// (III) xi*mu > 0 and rho = 0. The three cases partition the parameter set.
enum class Regime { CaseI, CaseII, CaseIII };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::CaseI: return "CaseI";
        case Regime::CaseII: return "CaseII";
        default: return "CaseIII";
    }
}

inline Regime classify_regime(const ModelParams& p) {
    if (p.xi * p.mu == 0.0) return Regime::CaseI;
    return p.rho > 0.0 ? Regime::CaseII : Regime::CaseIII;
}

// m values above 11/4 - sqrt(3) are covered by the global-existence results;
// smaller ones are not refused by the solver, just flagged.
inline bool m_admissible(double m) {
    if (!(m > 1.0)) throw Error("m_admissible requires m > 1");
    return m > critical_m();
}

struct ValueInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// Predicted large-time state of (u, v). v_limit is either a point value or an
// open interval when only bounds are proven.
struct EquilibriumPrediction {
    std::optional<double> u_limit;
    std::variant<double, ValueInterval> v_limit = 0.0;
    std::optional<double> decay_rate_lower_bound; // case mu>0, rho>0, xi<rho
};

inline EquilibriumPrediction predict_equilibrium(const ModelParams& p, const Field& u0,
                                                 const Field& v0) {
    if (u0.grid != v0.grid) throw Error("predict_equilibrium: u0 and v0 grids differ");
    if (p.eps_reg > 0.0)
        throw NotPredictedError(
            "predict_equilibrium: limits are known for the unregularized system only (the "
            "-eps u^2 sink changes the conserved quantities)");
    const double vol = u0.grid.cell_volume * static_cast<double>(u0.grid.cell_count);
    const double mass_u = integrate(u0);
    const double mass_v = integrate(v0);

    EquilibriumPrediction out;
    if (p.mu == 0.0 && p.rho == 0.0) {
        if (!(mass_u > 0.0))
            throw NotPredictedError("predict_equilibrium: u0 must not vanish identically");
        out.u_limit = (mass_u + p.xi * mass_v) / vol;
        out.v_limit = 0.0;
        return out;
    }
    if (p.mu == 0.0 && p.rho > 0.0) {
        if (!(mass_v > 0.0) || !(mass_u > 0.0))
            throw NotPredictedError("predict_equilibrium: u0 and v0 must not vanish identically");
        out.u_limit = 0.0;
        out.v_limit = ValueInterval{0.0, mass_v / vol};
        return out;
    }
    if (p.mu > 0.0 && p.rho > 0.0 && p.xi < p.rho) {
        if (!(mass_v > 0.0) || !(mass_u > 0.0))
            throw NotPredictedError("predict_equilibrium: u0 and v0 must not vanish identically");
        out.u_limit = 0.0;
        out.v_limit = 1.0;
        out.decay_rate_lower_bound = p.rho - p.xi;
        return out;
    }
    throw NotPredictedError(
        "predict_equilibrium: no large-time result covers mu=" + std::to_string(p.mu) +
        ", rho=" + std::to_string(p.rho) + ", xi=" + std::to_string(p.xi));
}

} // namespace nutaxis
