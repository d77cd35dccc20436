#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nutaxis/grid.hpp"
#include "test_helpers.hpp"

using namespace nutaxis;
using Catch::Approx;

TEST_CASE("make_grid derives spacings", "[grid]") {
    const Grid g1 = make_grid(1, {256}, {1.0});
    CHECK(g1.spacing[0] == Approx(1.0 / 256).epsilon(0));
    CHECK(g1.cell_count == 256);

    const Grid g2 = make_grid(2, {64, 64}, {1.0, 1.0});
    CHECK(g2.spacing[0] == Approx(1.0 / 64).epsilon(0));
    CHECK(g2.spacing[1] == Approx(1.0 / 64).epsilon(0));
    CHECK(g2.cell_count == 64 * 64);
    CHECK(g2.cell_volume == Approx(1.0 / 4096));
}

TEST_CASE("make_grid rejects degenerate input", "[grid]") {
    CHECK_THROWS_AS(make_grid(1, {0}, {1.0}), GridError);
    CHECK_THROWS_AS(make_grid(1, {1}, {1.0}), GridError);
    CHECK_THROWS_AS(make_grid(0, {}, {}), GridError);
    CHECK_THROWS_AS(make_grid(4, {4, 4, 4}, {1, 1, 1}), GridError);
    CHECK_THROWS_AS(make_grid(1, {8}, {-1.0}), GridError);
    CHECK_THROWS_AS(make_grid(2, {8}, {1.0}), GridError);
}

TEST_CASE("grad_faces of a constant vanishes", "[grid]") {
    const Grid g = make_grid(2, {8, 6}, {1.0, 2.0});
    const Field f(g, 3.7);
    const FaceFlux q = grad_faces(f);
    CHECK(max_abs(q) == 0.0);
}

TEST_CASE("grad_faces two-cell difference quotient", "[grid]") {
    const Grid g = make_grid(1, {2}, {1.0}); // h = 0.5
    Field f(g);
    f[0] = 0.0;
    f[1] = 1.0;
    const FaceFlux q = grad_faces(f);
    REQUIRE(q.axis[0].size() == 3);
    CHECK(q.axis[0][0] == 0.0); // boundary
    CHECK(q.axis[0][1] == Approx(2.0));
    CHECK(q.axis[0][2] == 0.0);
}

TEST_CASE("grad_faces is exact on linear ramps", "[grid]") {
    const Grid g = make_grid(2, {16, 12}, {2.0, 3.0});
    const double slope = 1.75;
    const Field f = field_from(g, [&](const std::array<double, 3>& x) { return slope * x[0]; });
    const FaceFlux q = grad_faces(f);
    const detail::FaceIndexer fx(g, 0);
    for (index_t i0 = 1; i0 < g.cells[0]; ++i0)
        for (index_t i1 = 0; i1 < g.cells[1]; ++i1)
            CHECK(q.axis[0][static_cast<std::size_t>(detail::face_flat(fx, i0, i1, 0))] ==
                  Approx(slope).margin(1e-12));
    for (double v : q.axis[1]) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("div_faces of zero flux is zero", "[grid]") {
    const Grid g = make_grid(3, {4, 4, 4}, {1.0, 1.0, 1.0});
    const FaceFlux q(g);
    const Field d = div_faces(q);
    for (double v : d.values) CHECK(v == 0.0);
}

TEST_CASE("discrete divergence theorem holds for random fluxes", "[grid]") {
    std::mt19937 rng(12345);
    for (int dim = 1; dim <= 3; ++dim) {
        for (int rep = 0; rep < 20; ++rep) {
            Grid g;
            if (dim == 1) g = make_grid(1, {17}, {1.3});
            if (dim == 2) g = make_grid(2, {9, 14}, {1.0, 0.7});
            if (dim == 3) g = make_grid(3, {5, 6, 7}, {0.4, 1.1, 2.0});
            const FaceFlux q = testutil::random_flux(g, rng, 10.0);
            const double total = integrate(div_faces(q));
            // telescoping sum with zero boundary faces: round-off only
            CHECK(std::abs(total) < 1e-12);
        }
    }
}

TEST_CASE("divergence of a linear-ramp gradient vanishes in the interior", "[grid]") {
    const Grid g = make_grid(1, {32}, {2.0});
    const Field f = field_from(g, [](const std::array<double, 3>& x) { return 3.0 * x[0] + 1.0; });
    const Field lap = div_faces(grad_faces(f));
    for (index_t i = 1; i + 1 < g.cell_count; ++i) CHECK(std::abs(lap[i]) < 1e-10);
}

TEST_CASE("laplacian of a parabola approximates the second derivative", "[grid]") {
    const Grid g = make_grid(1, {64}, {1.0});
    const Field f = field_from(g, [](const std::array<double, 3>& x) { return x[0] * x[0]; });
    const Field lap = laplacian_neumann(f);
    // x^2 has zero slope at the left wall, so even the boundary cell is exact
    for (index_t i = 0; i + 1 < g.cell_count; ++i) CHECK(lap[i] == Approx(2.0).margin(1e-9));
}

TEST_CASE("laplacian integrates to zero for arbitrary fields", "[grid]") {
    std::mt19937 rng(99);
    const Grid g = make_grid(2, {12, 10}, {1.0, 1.0});
    for (int rep = 0; rep < 10; ++rep) {
        const Field f = testutil::random_field(g, rng, -5.0, 5.0);
        CHECK(std::abs(integrate(laplacian_neumann(f))) < 1e-12);
    }
}

TEST_CASE("laplacian converges at second order on a Neumann-compatible function", "[grid]") {
    const double pi = 3.14159265358979323846;
    auto err_at = [&](index_t n) {
        const Grid g = make_grid(1, {n}, {1.0});
        const Field f =
            field_from(g, [&](const std::array<double, 3>& x) { return std::cos(pi * x[0]); });
        const Field lap = laplacian_neumann(f);
        double err = 0.0;
        for (index_t i = 0; i < g.cell_count; ++i) {
            const double exact = -pi * pi * std::cos(pi * g.center(i, 0));
            err = std::max(err, std::abs(lap[i] - exact));
        }
        return err;
    };
    const double e1 = err_at(32), e2 = err_at(64), e3 = err_at(128);
    CHECK(e1 / e2 == Approx(4.0).margin(0.5));
    CHECK(e2 / e3 == Approx(4.0).margin(0.5));
}

TEST_CASE("integrate basics", "[grid]") {
    const Grid g = make_grid(2, {10, 10}, {1.0, 1.0});
    CHECK(integrate(Field(g, 2.5)) == Approx(2.5));
    CHECK(integrate(Field(g)) == 0.0);

    Field half(g);
    for (index_t i = 0; i < g.cell_count / 2; ++i) half[i] = 1.0;
    CHECK(integrate(half) == Approx(0.5));
}

TEST_CASE("lp_norm basics", "[grid]") {
    const Grid g = make_grid(1, {16}, {1.0});
    CHECK(lp_norm(Field(g, 2.0), 2.0) == Approx(2.0));

    Field f(g);
    f[0] = -3.0;
    f[1] = 1.0;
    CHECK(lp_norm(f, std::numeric_limits<double>::infinity()) == 3.0);

    std::mt19937 rng(7);
    const Field r = testutil::random_field(g, rng, -2.0, 2.0);
    Field absr = r;
    for (auto& v : absr.values) v = std::abs(v);
    CHECK(lp_norm(r, 1.0) == Approx(integrate(absr)));
    CHECK(lp_norm(Field(g, -1.5), 4.0) == Approx(1.5));

    CHECK_THROWS_AS(lp_norm(f, 0.5), Error);
}

TEST_CASE("field_from samples cell centers", "[grid]") {
    const Grid g = make_grid(1, {4}, {1.0});
    const Field f = field_from(g, [](const std::array<double, 3>& x) { return x[0]; });
    CHECK(f[0] == Approx(0.125));
    CHECK(f[3] == Approx(0.875));
}
