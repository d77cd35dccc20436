#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nutaxis/errors.hpp"

namespace nutaxis {

// Analysis of the bootstrap iteration
//   A_{k+1} = (2/3)(m-1) A_k^2 + (8m/3 - 2) A_k + 2m - 1/3,   A_1 = 1,
// whose divergence/convergence as a function of the diffusion exponent m
// separates the provable regime from the open one. All arithmetic runs in
// long double; results are returned as double.

// The threshold 11/4 - sqrt(3) ~= 1.01794919243112...
inline double critical_m() {
    const long double mc = 2.75L - std::numbers::sqrt3_v<long double>;
    return static_cast<double>(mc);
}

// (16 m^2 - 88 m + 73) / 9; zero exactly at m = 11/4 -+ sqrt(3).
inline double discriminant(double m) {
    const long double x = m;
    return static_cast<double>((16.0L * x * x - 88.0L * x + 73.0L) / 9.0L);
}

namespace detail {
inline void require_m_range(double m) {
    if (!(m > 1.0 && m < 2.0))
        throw Error("exponent analysis requires 1 < m < 2, got m=" + std::to_string(m));
}
} // namespace detail

// Smaller positive fixed point (9 - 8m - sqrt(16m^2 - 88m + 73)) / (4(m-1)),
// present iff the discriminant is nonnegative, i.e. m <= 11/4 - sqrt(3).
inline std::optional<double> a_star(double m) {
    detail::require_m_range(m);
    const long double x = m;
    long double d = 16.0L * x * x - 88.0L * x + 73.0L;
    if (d < 0.0L) {
        if (d < -1e-13L) return std::nullopt;
        d = 0.0L; // tangency up to round-off: use the double root
    }
    const long double root = (9.0L - 8.0L * x - std::sqrt(d)) / (4.0L * (x - 1.0L));
    return static_cast<double>(root);
}

enum class AkClass { Diverges, ConvergesTo, Inconclusive };

inline std::string to_string(AkClass c) {
    switch (c) {
        case AkClass::Diverges: return "Diverges";
        case AkClass::ConvergesTo: return "ConvergesTo";
        default: return "Inconclusive";
    }
}

struct IterateOptions {
    std::int64_t k_max = 1'000'000;
    double divergence_cap = 1e12;
    double fixed_point_tol = 1e-12;
    bool record_sequence = true; // sweeps/bisection turn this off
};

struct ExponentReport {
    double m = 0.0;
    std::vector<double> sequence; // A_1 .. A_K when recorded
    AkClass classification = AkClass::Inconclusive;
    std::optional<double> limit;              // iteration limit when it converges
    std::optional<double> a_star_closed_form; // closed-form fixed point when it exists
    double discriminant = 0.0;
    std::int64_t k_truncated = 0;
};

inline ExponentReport iterate_ak(double m, const IterateOptions& opt = {}) {
    detail::require_m_range(m);
    if (opt.k_max < 2) throw Error("iterate_ak: k_max must be >= 2");

    ExponentReport rep;
    rep.m = m;
    rep.discriminant = discriminant(m);
    rep.a_star_closed_form = a_star(m);

    const long double x = m;
    const long double c2 = (2.0L / 3.0L) * (x - 1.0L);
    const long double c1 = 8.0L * x / 3.0L - 2.0L;
    const long double c0 = 2.0L * x - 1.0L / 3.0L;

    long double a = 1.0L;
    if (opt.record_sequence) rep.sequence.push_back(1.0);
    rep.k_truncated = 1;

    for (std::int64_t k = 1; k < opt.k_max; ++k) {
        const long double next = c2 * a * a + c1 * a + c0;
        if (!(next > a))
            throw Error("iterate_ak: sequence failed to increase (internal invariant)");
        rep.k_truncated = k + 1;
        if (opt.record_sequence) rep.sequence.push_back(static_cast<double>(next));
        if (next > static_cast<long double>(opt.divergence_cap)) {
            rep.classification = AkClass::Diverges;
            return rep;
        }
        if (next - a < static_cast<long double>(opt.fixed_point_tol)) {
            rep.classification = AkClass::ConvergesTo;
            rep.limit = static_cast<double>(next);
            return rep;
        }
        a = next;
    }

    // Iteration stalled within k_max. At a tangency the closed form is exact,
    // so classify by the discriminant's sign when it is at round-off scale.
    if (std::abs(rep.discriminant) < 1e-14) {
        if (rep.discriminant >= 0.0) {
            rep.classification = AkClass::ConvergesTo;
            rep.limit = rep.a_star_closed_form;
        } else {
            rep.classification = AkClass::Diverges;
        }
    }
    return rep;
}

// Locate the divergence threshold of the iteration by bisection on its
// classification over [lo, hi] subset of [1, 2].
inline double bisect_critical_m(double lo = 1.0, double hi = 2.0, double tol = 1e-9,
                                IterateOptions opt = {}) {
    if (!(lo >= 1.0 && hi <= 2.0 && lo < hi))
        throw Error("bisect_critical_m: need 1 <= lo < hi <= 2");
    if (!(tol > 0.0)) throw Error("bisect_critical_m: tol must be positive");
    opt.record_sequence = false;

    auto diverges = [&](double m) {
        const ExponentReport r = iterate_ak(m, opt);
        if (r.classification == AkClass::Inconclusive)
            throw Error("bisect_critical_m: inconclusive classification at m=" + std::to_string(m));
        return r.classification == AkClass::Diverges;
    };

    // Endpoints of [1,2] are excluded from the map's domain; by continuity the
    // lo side converges and the hi side diverges whenever the bracket holds.
    const bool lo_div = (lo > 1.0) ? diverges(lo) : false;
    const bool hi_div = (hi < 2.0) ? diverges(hi) : true;
    if (lo_div || !hi_div)
        throw Error("bisect_critical_m: threshold not bracketed by [lo, hi]");

    double a = lo, b = hi;
    while (b - a > tol) {
        const double mid = 0.5 * (a + b);
        if (diverges(mid))
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

// Checks A* > 5 over a set of sample exponents in (1, 11/4 - sqrt(3)].
inline bool a_star_exceeds_five(std::span<const double> samples) {
    const double mc = critical_m();
    for (double m : samples) {
        if (!(m > 1.0 && m <= mc))
            throw Error("a_star_exceeds_five: sample outside (1, 11/4-sqrt(3)]");
        const auto s = a_star(m);
        if (!s) throw Error("a_star_exceeds_five: fixed point missing in range");
        if (!(*s > 5.0)) return false;
    }
    return true;
}

} // namespace nutaxis
