#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "nutaxis/errors.hpp"

namespace nutaxis {

using index_t = std::int64_t;

// Uniform Cartesian grid over an axis-aligned box, cell-centered sampling,
// zero-flux (mirrored ghost) boundaries. Unused trailing axes are padded to
// extent 1 so kernels can always run three nested loops.
struct Grid {
    int dim = 1;
    std::array<index_t, 3> cells{1, 1, 1};
    std::array<double, 3> lengths{1.0, 1.0, 1.0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    index_t cell_count = 1;
    double cell_volume = 1.0;

    friend bool operator==(const Grid&, const Grid&) = default;

    // Row-major strides, axis 0 slowest.
    std::array<index_t, 3> strides() const {
        return {cells[1] * cells[2], cells[2], 1};
    }

    index_t flat(index_t i0, index_t i1, index_t i2) const {
        return (i0 * cells[1] + i1) * cells[2] + i2;
    }

    double center(index_t i, int axis) const {
        return (static_cast<double>(i) + 0.5) * spacing[axis];
    }

    std::array<double, 3> cell_center(index_t flat_idx) const {
        const auto s = strides();
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            const index_t ia = (flat_idx / s[a]) % cells[a];
            x[a] = center(ia, a);
        }
        return x;
    }
};

inline Grid make_grid(int dim, std::span<const index_t> cells_per_axis,
                      std::span<const double> lengths_per_axis) {
    if (dim < 1 || dim > 3)
        throw GridError("grid dimension must be 1, 2 or 3");
    if (cells_per_axis.size() != static_cast<std::size_t>(dim) ||
        lengths_per_axis.size() != static_cast<std::size_t>(dim))
        throw GridError("cells/lengths must supply one entry per axis");
    Grid g;
    g.dim = dim;
    for (int a = 0; a < dim; ++a) {
        if (cells_per_axis[a] < 2)
            throw GridError("grid needs at least 2 cells per axis");
        if (!(lengths_per_axis[a] > 0.0) || !std::isfinite(lengths_per_axis[a]))
            throw GridError("grid lengths must be positive");
        g.cells[a] = cells_per_axis[a];
        g.lengths[a] = lengths_per_axis[a];
        g.spacing[a] = lengths_per_axis[a] / static_cast<double>(cells_per_axis[a]);
    }
    g.cell_count = g.cells[0] * g.cells[1] * g.cells[2];
    g.cell_volume = 1.0;
    for (int a = 0; a < dim; ++a) g.cell_volume *= g.spacing[a];
    return g;
}

inline Grid make_grid(int dim, std::initializer_list<index_t> cells,
                      std::initializer_list<double> lengths) {
    return make_grid(dim, std::span<const index_t>(cells.begin(), cells.size()),
                     std::span<const double>(lengths.begin(), lengths.size()));
}

// Cell-centered scalar field. Values are stored row-major; the grid is held
// by value so a Field is a self-contained value type.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.cell_count), fill) {}

    index_t size() const { return static_cast<index_t>(values.size()); }
    double& operator[](index_t i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](index_t i) const { return values[static_cast<std::size_t>(i)]; }
};

template <class Fn>
Field field_from(const Grid& g, Fn&& fn) {
    Field f(g);
    for (index_t c = 0; c < g.cell_count; ++c)
        f[c] = fn(g.cell_center(c));
    return f;
}

// One value per face, one lattice per axis. Faces along axis a form a grid
// with cells[a]+1 positions along a; the first and last position on each
// axis are boundary faces and always hold exactly zero (no-flux boundary).
struct FaceFlux {
    Grid grid;
    std::array<std::vector<double>, 3> axis;

    FaceFlux() = default;
    explicit FaceFlux(const Grid& g) : grid(g) {
        for (int a = 0; a < g.dim; ++a)
            axis[a].assign(static_cast<std::size_t>(face_count(g, a)), 0.0);
    }

    static index_t face_count(const Grid& g, int a) {
        index_t n = 1;
        for (int b = 0; b < 3; ++b) n *= (b == a) ? g.cells[b] + 1 : g.cells[b];
        return n;
    }
};

namespace detail {

// Extents and row-major strides of the face lattice for one axis.
struct FaceIndexer {
    std::array<index_t, 3> n;
    std::array<index_t, 3> s;
    explicit FaceIndexer(const Grid& g, int a) {
        n = g.cells;
        n[a] += 1;
        s = {n[1] * n[2], n[2], 1};
    }
};

inline index_t face_flat(const FaceIndexer& fi, index_t i0, index_t i1, index_t i2) {
    return i0 * fi.s[0] + i1 * fi.s[1] + i2 * fi.s[2];
}

// Compensated (Kahan-Babuska) accumulator; deterministic sequential order.
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

} // namespace detail

// Two-point face differences of f along every axis: (f_right - f_left)/h.
// Boundary faces stay zero, the discrete form of the no-flux condition.
inline FaceFlux grad_faces(const Field& f) {
    const Grid& g = f.grid;
    FaceFlux q(g);
    const auto cs = g.strides();
    for (int a = 0; a < g.dim; ++a) {
        const detail::FaceIndexer fi(g, a);
        const double inv_h = 1.0 / g.spacing[a];
        std::array<index_t, 3> n = g.cells;
        n[a] -= 1; // interior faces along a: positions 1..cells[a]-1
        for (index_t i0 = 0; i0 < n[0]; ++i0)
            for (index_t i1 = 0; i1 < n[1]; ++i1)
                for (index_t i2 = 0; i2 < n[2]; ++i2) {
                    std::array<index_t, 3> c{i0, i1, i2}; // left cell
                    const index_t left = c[0] * cs[0] + c[1] * cs[1] + c[2] * cs[2];
                    const index_t right = left + cs[a];
                    std::array<index_t, 3> fpos = c;
                    fpos[a] += 1;
                    q.axis[a][static_cast<std::size_t>(
                        detail::face_flat(fi, fpos[0], fpos[1], fpos[2]))] =
                        (f[right] - f[left]) * inv_h;
                }
    }
    return q;
}

// Conservative divergence: per cell, sum over axes of (outflow - inflow)/h.
// With zero boundary faces the integral of the result telescopes to zero.
inline Field div_faces(const FaceFlux& q) {
    const Grid& g = q.grid;
    Field d(g);
    const auto cs = g.strides();
    for (int a = 0; a < g.dim; ++a) {
        const detail::FaceIndexer fi(g, a);
        const double inv_h = 1.0 / g.spacing[a];
        const auto& qa = q.axis[a];
        for (index_t i0 = 0; i0 < g.cells[0]; ++i0)
            for (index_t i1 = 0; i1 < g.cells[1]; ++i1)
                for (index_t i2 = 0; i2 < g.cells[2]; ++i2) {
                    const std::array<index_t, 3> c{i0, i1, i2};
                    std::array<index_t, 3> hi = c;
                    hi[a] += 1;
                    const double lo_face =
                        qa[static_cast<std::size_t>(detail::face_flat(fi, c[0], c[1], c[2]))];
                    const double hi_face =
                        qa[static_cast<std::size_t>(detail::face_flat(fi, hi[0], hi[1], hi[2]))];
                    d[c[0] * cs[0] + c[1] * cs[1] + c[2] * cs[2]] += (hi_face - lo_face) * inv_h;
                }
    }
    return d;
}

// Standard (2*dim+1)-point Neumann Laplacian, realized as div(grad) so the
// discrete divergence theorem holds exactly.
inline Field laplacian_neumann(const Field& f) { return div_faces(grad_faces(f)); }

inline double integrate(const Field& f) {
    detail::NeumaierSum s;
    for (double v : f.values) s.add(v);
    return s.value() * f.grid.cell_volume;
}

inline double lp_norm(const Field& f, double p) {
    if (std::isinf(p) && p > 0) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0))
        throw Error("lp_norm: p must be >= 1 or infinity");
    detail::NeumaierSum s;
    if (p == 1.0) {
        for (double v : f.values) s.add(std::abs(v));
        return s.value() * f.grid.cell_volume;
    }
    if (p == 2.0) {
        for (double v : f.values) s.add(v * v);
        return std::sqrt(s.value() * f.grid.cell_volume);
    }
    for (double v : f.values) s.add(std::pow(std::abs(v), p));
    return std::pow(s.value() * f.grid.cell_volume, 1.0 / p);
}

inline double max_abs(const FaceFlux& q) {
    double m = 0.0;
    for (int a = 0; a < q.grid.dim; ++a)
        for (double v : q.axis[a]) m = std::max(m, std::abs(v));
    return m;
}

// Face values averaged back to the cell center, one component per axis.
inline std::array<double, 3> center_gradient(const FaceFlux& q, index_t i0, index_t i1,
                                             index_t i2) {
    const Grid& g = q.grid;
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) {
        const detail::FaceIndexer fi(g, a);
        std::array<index_t, 3> c{i0, i1, i2};
        std::array<index_t, 3> hi = c;
        hi[a] += 1;
        const double lo = q.axis[a][static_cast<std::size_t>(detail::face_flat(fi, c[0], c[1], c[2]))];
        const double hiv = q.axis[a][static_cast<std::size_t>(detail::face_flat(fi, hi[0], hi[1], hi[2]))];
        out[a] = 0.5 * (lo + hiv);
    }
    return out;
}

} // namespace nutaxis
