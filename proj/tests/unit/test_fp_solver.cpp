#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "dam/fp_solver.hpp"
#include "dam/learning.hpp"
#include "dam/stats.hpp"
#include "oracles.hpp"

using namespace dam;
using doctest::Approx;

namespace {

ReducedParams at(double beta, double r) {
    ReducedParams p;
    p.beta = beta;
    p.r = r;
    return p;
}

// Density of the mirrored type evaluated at -x.
double mirrored(const Density1D& d, double x) {
    const double pos = (-x - d.lo) / d.step();
    const int i = static_cast<int>(std::floor(pos));
    if (i < 0 || i + 1 >= d.n_points()) return 0.0;
    const double w = pos - i;
    return (1 - w) * d.values[i] + w * d.values[i + 1];
}

}  // namespace

TEST_CASE("stationary density of an Ornstein-Uhlenbeck drift is Gaussian") {
    const double k = 1.3, c = 0.4, r = 0.05;
    const auto d = stationary_density([&](double x) { return JumpMoments{-k * (x - 0.2), c}; }, r, {-2, 2, 4001});
    const double sd = std::sqrt(r * c / (2 * k));
    for (double x : {0.0, 0.1, 0.2, 0.35})
        CHECK(d.values[static_cast<int>(std::lround((x + 2) / d.step()))] ==
              Approx(oracle::gauss_pdf(x, 0.2, sd)).epsilon(1e-4));
    CHECK(d.integral() == Approx(1.0));
}

TEST_CASE("narrow grids are detected and widened on request") {
    auto m = [](double x) { return JumpMoments{-x, 1.0}; };
    CHECK_THROWS_AS(stationary_density(m, 0.5, {-0.5, 0.5, 501}), GridTooNarrow);
    const auto d = stationary_density(m, 0.5, {-0.5, 0.5, 501, true});
    CHECK(d.hi > 2.0);
    CHECK_THROWS_AS(stationary_density(m, 0.5, {-1, 1, 3}), std::invalid_argument);
}

TEST_CASE("jump moments oracle at beta 0") {
    const auto model = make_market_model({}, {});
    const auto ret = type_returns(model, 0.8, TradingProbs{});
    const auto j = jump_moments(0.1, 0.0, ret);
    CHECK(j.m1 == Approx(0.5 * ret.e1[0] - 0.5 * ret.e1[1] - 0.1));
    CHECK(j.m2 == Approx(0.5 * (ret.e2[0] - 0.2 * ret.e1[0] + 0.01) + 0.5 * (ret.e2[1] + 0.2 * ret.e1[1] + 0.01)));
    const auto r = jump_moments_reduced(0.1, 0.8, 0.0, TradingProbs{}, {}, {});
    CHECK(r.m1 == Approx(j.m1));
    CHECK_THROWS_AS(jump_moments_reduced(0.1, 0.8, 0.0, TradingProbs{}, {}, {}, 0.5), std::invalid_argument);
}

TEST_CASE("drift slope matches a finite difference") {
    const auto model = make_market_model({}, {});
    const auto ret = type_returns(model, 0.2, TradingProbs{{0.7, 1.0, 1.0, 0.9}});
    for (double x : {-0.3, 0.0, 0.25}) {
        const double h = 1e-6;
        const double fd = (jump_moments(x + h, 6.0, ret).m1 - jump_moments(x - h, 6.0, ret).m1) / (2 * h);
        CHECK(drift_slope(x, 6.0, ret) == Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("demand ratios from market fractions") {
    const std::vector<AgentType> types{{0.8, 0.5}, {0.2, 0.5}};
    const auto d = demand_ratios_from_fractions({0.5, 0.5}, types);
    CHECK(d.d1 == Approx(1.0));
    CHECK(d.d2 == Approx(1.0));
    const auto e = demand_ratios_from_fractions({1.0, 0.0}, types);
    CHECK(e.d1 == Approx(4.0));
    CHECK(e.d2 == Approx(0.25));
    CHECK_THROWS(demand_ratios_from_fractions({0.5}, types));
}

TEST_CASE("self-consistent state is mirror symmetric with D1 D2 = 1") {
    for (double beta : {2.222, 6.667}) {
        const auto s = solve_self_consistent(at(beta, 0.1));
        REQUIRE(s.converged);
        CHECK(s.d.d1 * s.d.d2 == Approx(1.0).epsilon(1e-5));
        const auto& a = s.densities[0];
        const auto& b = s.densities[1];
        CHECK(a.lo == Approx(-b.hi));
        double worst = 0;
        for (int i = 0; i < a.n_points(); ++i) worst = std::max(worst, std::abs(a.values[i] - mirrored(b, a.x(i))));
        CHECK(worst < 1e-3 * *std::max_element(a.values.begin(), a.values.end()));
        CHECK(s.market_fractions[0] + s.market_fractions[1] == Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("the solution is a fixed point of the map") {
    const auto p = at(4.0, 0.1);
    const auto s = solve_self_consistent(p);
    REQUIRE(s.converged);
    const auto model = make_market_model(p.markets, p.bidask);
    const auto again = map_demand_ratios(p, s.d, default_grid(p), model);
    CHECK(again.d1 == Approx(s.d.d1).epsilon(1e-5));
    CHECK(again.d2 == Approx(s.d.d2).epsilon(1e-5));
}

TEST_CASE("solver traces and rejects bad options") {
    auto p = at(2.0, 0.1);
    SolverOptions o;
    o.max_iter = 3;
    o.newton_fallback = false;
    const auto s = solve_self_consistent(p, {}, o);
    CHECK_FALSE(s.converged);
    CHECK(s.trace.size() == 3);
    o.damping = 0.0;
    CHECK_THROWS(solve_self_consistent(p, {}, o));
    p.alpha = 0.5;
    CHECK_THROWS(solve_self_consistent(p));
}

TEST_CASE("market fractions of point mass densities") {
    Density1D d;
    d.lo = -1;
    d.hi = 1;
    d.values.assign(201, 0.0);
    d.values[150] = 1.0 / d.step();
    const auto f = market_fractions({d}, 3.0);
    CHECK(f[0] == Approx(choice_prob_market1(0.5, 3.0)));
}

TEST_CASE("Ornstein-Uhlenbeck normalization is exact to 1e-6") {
    const double s2 = 0.3, r = 0.1;
    const auto d = stationary_density([&](double x) { return JumpMoments{-x, s2}; }, r, {-1.5, 1.5, 6001});
    const double sd = std::sqrt(r * s2 / 2.0);
    for (int i = 0; i < d.n_points(); i += 250) {
        const double ref = oracle::gauss_pdf(d.x(i), 0.0, sd);
        if (ref > 1e-3) CHECK(d.values[i] == Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("balanced type at zero drift offset is a drift zero") {
    const auto model = make_market_model({}, {});
    const auto ret = type_returns(model, 0.5, TradingProbs{});
    CHECK(ret.e1[0] == Approx(ret.e1[1]));
    CHECK(std::abs(jump_moments(0.0, 3.0, ret).m1) < 1e-12);
}

TEST_CASE("beta 0 gives equal market fractions and unit demand ratios") {
    const auto s = solve_self_consistent(at(0.0, 0.1));
    REQUIRE(s.converged);
    for (double f : s.market_fractions) CHECK(f == Approx(0.5).epsilon(1e-12));
    CHECK(s.d.d1 == Approx(1.0).epsilon(1e-9));
    CHECK(s.d.d2 == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Binder and modes below and above the threshold") {
    const auto lo = solve_self_consistent(at(2.222, 0.1));
    const auto hi = solve_self_consistent(at(6.667, 0.1));
    REQUIRE(lo.converged);
    REQUIRE(hi.converged);
    for (const auto& d : lo.densities) {
        CHECK(binder(d) < 0.2);
        CHECK(count_modes(d) == 1);
    }
    CHECK(std::max(binder(hi.densities[0]), binder(hi.densities[1])) > 0.5);
    CHECK(std::max(count_modes(hi.densities[0]), count_modes(hi.densities[1])) == 2);
}
