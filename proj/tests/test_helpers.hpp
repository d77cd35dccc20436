#pragma once

#include <cmath>
#include <random>

#include "nutaxis/grid.hpp"
#include "nutaxis/solver.hpp"

namespace testutil {

using namespace nutaxis;

inline Field random_field(const Grid& g, std::mt19937& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Field f(g);
    for (auto& v : f.values) v = dist(rng);
    return f;
}

inline FaceFlux random_flux(const Grid& g, std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    FaceFlux q(g);
    for (int a = 0; a < g.dim; ++a) {
        // interior faces only; boundary faces must stay zero
        const detail::FaceIndexer fi(g, a);
        std::array<index_t, 3> n = g.cells;
        n[a] -= 1;
        for (index_t i0 = 0; i0 < n[0]; ++i0)
            for (index_t i1 = 0; i1 < n[1]; ++i1)
                for (index_t i2 = 0; i2 < n[2]; ++i2) {
                    std::array<index_t, 3> fpos{i0, i1, i2};
                    fpos[a] += 1;
                    q.axis[a][static_cast<std::size_t>(
                        detail::face_flat(fi, fpos[0], fpos[1], fpos[2]))] = dist(rng);
                }
    }
    return q;
}

// Smooth positive field built from low cosine modes; zero normal derivative
// on every wall by construction.
inline Field random_smooth_positive(const Grid& g, std::mt19937& rng, double base_lo = 0.5,
                                    double base_hi = 2.0, int max_mode = 4) {
    const double pi = 3.14159265358979323846;
    std::uniform_real_distribution<double> base_dist(base_lo, base_hi);
    std::uniform_real_distribution<double> coef_dist(-1.0, 1.0);
    const double base = base_dist(rng);

    std::vector<std::array<double, 4>> modes; // coef, k per axis
    double total = 0.0;
    for (int k = 1; k <= max_mode; ++k) {
        const double c = coef_dist(rng);
        modes.push_back({c, static_cast<double>(k), 0.0, 0.0});
        total += std::abs(c);
    }
    const double amp = 0.8 * base / std::max(total, 1e-12);

    Field f(g);
    for (index_t i = 0; i < g.cell_count; ++i) {
        const auto x = g.cell_center(i);
        double val = base;
        for (const auto& m : modes) {
            double prod = 1.0;
            for (int a = 0; a < g.dim; ++a)
                prod *= std::cos(m[1] * pi * x[a] / g.lengths[a]);
            val += amp * m[0] * prod;
        }
        f[i] = val;
    }
    return f;
}

inline SimState constant_state(const Grid& g, double u0, double v0) {
    SimState s;
    s.u = Field(g, u0);
    s.v = Field(g, v0);
    s.t = 0.0;
    return s;
}

} // namespace testutil
