#include <doctest.h>

#include <cmath>

#include "dam/learning.hpp"

using namespace dam;
using doctest::Approx;

TEST_CASE("softmax sums to one and is uniform at beta 0") {
    const AttractionVector a{0.3, -1.0, 2.0, 0.0};
    const auto p0 = choice_probs(a, 0.0);
    for (int k = 0; k < kActions; ++k) CHECK(p0[k] == Approx(0.25));
    const auto p = choice_probs(a, 3.0);
    double sum = 0;
    for (int k = 0; k < kActions; ++k) sum += p[k];
    CHECK(sum == Approx(1.0));
    CHECK(p[1] / p[0] == Approx(std::exp(3.0 * (-1.0 - 0.3))));
}

TEST_CASE("softmax survives huge attractions") {
    const AttractionVector a{1000.0, 999.0, -1000.0, 0.0};
    const auto p = choice_probs(a, 50.0);
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] == Approx(1.0));
    CHECK(p[2] == 0.0);
}

TEST_CASE("attraction update with and without forgetting of unplayed actions") {
    const AttractionVector a{1.0, 2.0, 3.0, 4.0};
    LearningParams lp;
    lp.r = 0.1;
    lp.alpha = 1.0;
    const auto u = update_attractions(a, Action::S1, 0.5, lp);
    CHECK(u[0] == Approx(0.9));
    CHECK(u[1] == Approx(0.9 * 2.0 + 0.05));
    CHECK(u[3] == Approx(3.6));
    lp.alpha = 0.0;
    const auto v = update_attractions(a, Action::S1, 0.5, lp);
    CHECK(v[0] == 1.0);
    CHECK(v[2] == 3.0);
    CHECK(v[1] == Approx(1.85));
}

TEST_CASE("logistic market choice") {
    CHECK(choice_prob_market1(0.0, 5.0) == Approx(0.5));
    CHECK(choice_prob_market1(0.4, 2.0) == Approx(1.0 / (1.0 + std::exp(-0.8))));
    CHECK(choice_prob_market1(0.4, 2.0) + choice_prob_market1(-0.4, 2.0) == Approx(1.0));
    CHECK(choice_prob_market1(-1e4, 10.0) >= 0.0);
}

TEST_CASE("reduced update matches the full update on the difference") {
    const AttractionVector a{0.2, 0.2, -0.1, -0.1};
    LearningParams lp;
    lp.r = 0.2;
    const auto u = update_attractions(a, Action::B2, 0.7, lp);
    const double delta = a[0] - a[2];
    CHECK(update_delta(delta, 1, 0.7, 0.2) == Approx(u[0] - u[2]));
    CHECK(update_delta(delta, 0, 0.7, 0.2) == Approx(0.8 * delta + 0.14));
}

TEST_CASE("learning parameter validation") {
    LearningParams lp;
    lp.r = 0.0;
    CHECK_THROWS(lp.validate());
    lp.r = 0.1;
    lp.beta = -1.0;
    CHECK_THROWS(lp.validate());
}

TEST_CASE("softmax examples") {
    const auto p = choice_probs({1.0, 0.0, 0.0, 0.0}, 1e3);
    CHECK(p[0] == Approx(1.0));
    CHECK(p[1] < 1e-300);
    const AttractionVector a{std::log(2.0), 0.0, 0.3, -0.2};
    const AttractionVector shifted{std::log(2.0) + 5.0, 5.0, 5.3, 4.8};
    const auto x = choice_probs(a, 1.0), y = choice_probs(shifted, 1.0);
    for (int k = 0; k < kActions; ++k) CHECK(x[k] == Approx(y[k]).epsilon(1e-12));
    CHECK(x[0] / x[1] == Approx(2.0));
}

TEST_CASE("update examples") {
    LearningParams lp;
    lp.r = 0.1;
    CHECK(update_attractions({0, 0, 0, 0}, Action::B1, 1.0, lp)[0] == Approx(0.1));
    CHECK(update_attractions({0, 1, 0, 0}, Action::B1, 1.0, lp)[1] == Approx(0.9));
    lp.alpha = 0.0;
    CHECK(update_attractions({0, 1, 0, 0}, Action::B1, 1.0, lp)[1] == 1.0);
}

TEST_CASE("logistic examples") {
    CHECK(choice_prob_market1(std::log(3.0) / 2.0, 2.0) == Approx(0.75));
    CHECK(choice_prob_market1(-1e6, 1.0) == Approx(0.0));
}
