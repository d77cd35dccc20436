#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nutaxis/model.hpp"
#include "test_helpers.hpp"

using namespace nutaxis;
using Catch::Approx;

TEST_CASE("reaction_u formula", "[model]") {
    ModelParams p;
    p.xi = 1.0;
    p.rho = 0.5;
    CHECK(reaction_u(2.0, 3.0, p) == Approx(5.0));
    CHECK(reaction_u(0.0, 7.3, p) == 0.0);

    p.rho = 1.0;
    p.eps_reg = 0.1;
    CHECK(reaction_u(1.0, 1.0, p) == Approx(-0.1));
}

TEST_CASE("reaction_v formula", "[model]") {
    ModelParams p;
    p.mu = 1.0;
    CHECK(reaction_v(0.0, 0.5, p) == Approx(0.25));
    CHECK(reaction_v(4.2, 0.0, p) == 0.0);
    p.mu = 2.0;
    CHECK(reaction_v(1.0, 1.0, p) == Approx(-1.0));
}

TEST_CASE("regime classification", "[model]") {
    ModelParams p;
    p.xi = 0.0; p.mu = 5.0; p.rho = 1.0;
    CHECK(classify_regime(p) == Regime::CaseI);
    p.xi = 1.0; p.mu = 1.0; p.rho = 1.0;
    CHECK(classify_regime(p) == Regime::CaseII);
    p.rho = 0.0;
    CHECK(classify_regime(p) == Regime::CaseIII);
}

TEST_CASE("regime predicates partition the parameter set", "[model]") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> mag(0.0, 3.0);
    for (int rep = 0; rep < 500; ++rep) {
        ModelParams p;
        p.xi = coin(rng) < 0.3 ? 0.0 : mag(rng);
        p.mu = coin(rng) < 0.3 ? 0.0 : mag(rng);
        p.rho = coin(rng) < 0.3 ? 0.0 : mag(rng);
        const bool case1 = p.xi * p.mu == 0.0;
        const bool case2 = p.xi * p.mu * p.rho > 0.0;
        const bool case3 = p.xi * p.mu > 0.0 && p.rho == 0.0;
        CHECK((int(case1) + int(case2) + int(case3)) == 1);
        const Regime r = classify_regime(p);
        if (case1) CHECK(r == Regime::CaseI);
        if (case2) CHECK(r == Regime::CaseII);
        if (case3) CHECK(r == Regime::CaseIII);
    }
}

TEST_CASE("m_admissible against the critical exponent", "[model]") {
    CHECK(m_admissible(2.0));
    CHECK(m_admissible(1.018)); // 11/4 - sqrt(3) ~ 1.01795
    CHECK_FALSE(m_admissible(1.01));
    CHECK_FALSE(m_admissible(critical_m())); // strict inequality
    CHECK_THROWS_AS(m_admissible(1.0), Error);
}

TEST_CASE("predict_equilibrium: conserved regime", "[model]") {
    const Grid g = make_grid(1, {64}, {1.0});
    ModelParams p;
    p.xi = 1.0;
    // masses 0.3 and 0.2 on the unit box
    const Field u0(g, 0.3);
    const Field v0(g, 0.2);
    const EquilibriumPrediction pred = predict_equilibrium(p, u0, v0);
    REQUIRE(pred.u_limit.has_value());
    CHECK(*pred.u_limit == Approx(0.5));
    REQUIRE(std::holds_alternative<double>(pred.v_limit));
    CHECK(std::get<double>(pred.v_limit) == 0.0);
    CHECK_FALSE(pred.decay_rate_lower_bound.has_value());
}

TEST_CASE("predict_equilibrium: conserved limit matches the discrete mean exactly", "[model]") {
    std::mt19937 rng(5);
    const Grid g = make_grid(2, {12, 8}, {2.0, 1.5});
    ModelParams p;
    p.xi = 0.7;
    const Field u0 = testutil::random_field(g, rng, 0.0, 2.0);
    const Field v0 = testutil::random_field(g, rng, 0.0, 1.0);
    const EquilibriumPrediction pred = predict_equilibrium(p, u0, v0);
    const double volume = g.cell_volume * static_cast<double>(g.cell_count);
    CHECK(*pred.u_limit == (integrate(u0) + p.xi * integrate(v0)) / volume);
}

TEST_CASE("predict_equilibrium: consumption-only regime gives an interval", "[model]") {
    const Grid g = make_grid(1, {32}, {1.0});
    ModelParams p;
    p.mu = 0.0;
    p.rho = 1.0;
    const Field u0(g, 0.1);
    const Field v0(g, 0.8);
    const EquilibriumPrediction pred = predict_equilibrium(p, u0, v0);
    CHECK(*pred.u_limit == 0.0);
    REQUIRE(std::holds_alternative<ValueInterval>(pred.v_limit));
    const auto iv = std::get<ValueInterval>(pred.v_limit);
    CHECK(iv.lo == 0.0);
    CHECK(iv.hi == Approx(0.8));
}

TEST_CASE("predict_equilibrium: logistic regime with decay bound", "[model]") {
    const Grid g = make_grid(1, {32}, {1.0});
    ModelParams p;
    p.mu = 1.0;
    p.rho = 1.0;
    p.xi = 0.25;
    const Field u0(g, 0.1);
    const Field v0(g, 0.5);
    const EquilibriumPrediction pred = predict_equilibrium(p, u0, v0);
    CHECK(*pred.u_limit == 0.0);
    CHECK(std::get<double>(pred.v_limit) == 1.0);
    REQUIRE(pred.decay_rate_lower_bound.has_value());
    CHECK(*pred.decay_rate_lower_bound == Approx(0.75));
}

TEST_CASE("predict_equilibrium refuses uncovered parameters", "[model]") {
    const Grid g = make_grid(1, {32}, {1.0});
    const Field u0(g, 0.1), v0(g, 0.5);

    ModelParams p;
    p.mu = 1.0; p.rho = 1.0; p.xi = 2.0; // xi >= rho
    CHECK_THROWS_AS(predict_equilibrium(p, u0, v0), NotPredictedError);

    p.rho = 0.0; p.xi = 0.5; // mu > 0, rho = 0
    CHECK_THROWS_AS(predict_equilibrium(p, u0, v0), NotPredictedError);

    ModelParams q; // mu = rho = 0 but u0 identically zero
    q.xi = 1.0;
    CHECK_THROWS_AS(predict_equilibrium(q, Field(g), v0), NotPredictedError);

    ModelParams r; // regularized system has different conserved quantities
    r.eps_reg = 1e-3;
    CHECK_THROWS_AS(predict_equilibrium(r, u0, v0), NotPredictedError);
}

TEST_CASE("parameter validation", "[model]") {
    ModelParams p;
    p.m = 0.9;
    CHECK_THROWS_AS(validate(p), Error);
    p.m = 2.0;
    p.chi = 0.0;
    CHECK_THROWS_AS(validate(p), Error);
    p.chi = 1.0;
    p.rho = -1.0;
    CHECK_THROWS_AS(validate(p), Error);
}
