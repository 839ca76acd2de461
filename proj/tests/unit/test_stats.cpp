#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dam/random.hpp"
#include "dam/stats.hpp"
#include "oracles.hpp"

using namespace dam;
using doctest::Approx;

namespace {

Density1D tabulate(double lo, double hi, int n, const std::function<double(double)>& f) {
    Density1D d;
    d.lo = lo;
    d.hi = hi;
    d.values.resize(n);
    for (int i = 0; i < n; ++i) d.values[i] = f(d.x(i));
    const double m = d.integral();
    for (double& v : d.values) v /= m;
    return d;
}

}  // namespace

TEST_CASE("projection") {
    const auto p = project({1.0, 2.0, 3.0, 5.0});
    CHECK(p.delta_bs == Approx(-3.0));
    CHECK(p.delta_12 == Approx(-5.0));
}

TEST_CASE("Binder cumulant limits") {
    Rng rng(2);
    std::vector<double> g(400000);
    for (double& x : g) x = rng.normal();
    CHECK(std::abs(binder(g)) < 0.01);
    const std::vector<double> two{1.0, -1.0, 1.0, -1.0};
    CHECK(binder(two) == Approx(2.0 / 3.0));
    std::vector<double> scaled = g;
    for (double& x : scaled) x *= 7.5;
    CHECK(binder(scaled) == Approx(binder(g)).epsilon(1e-9));
    CHECK_THROWS_AS(binder(std::vector<double>{0.0, 0.0}), std::domain_error);

    const auto gauss = tabulate(-8, 8, 4001, [](double x) { return oracle::gauss_pdf(x, 0, 1); });
    CHECK(std::abs(binder(gauss)) < 1e-6);
    const auto uni = tabulate(-1, 1, 4001, [](double) { return 1.0; });
    CHECK(binder(uni) == Approx(1.0 - (1.0 / 5.0) / (3.0 / 9.0)).epsilon(1e-4));
}

TEST_CASE("Binder by type averages per-type cumulants") {
    const std::vector<double> x{1, -1, 1, -1, 0.5, -0.5, 2, -2};
    const std::vector<int> t{0, 0, 0, 0, 1, 1, 1, 1};
    const double b1 = 2.0 / 3.0;
    const std::vector<double> y{0.5, -0.5, 2, -2};
    CHECK(binder_by_type(x, t) == Approx(0.5 * (b1 + binder(y))));
}

TEST_CASE("log lags") {
    const auto l = log_lags(1000, 20);
    CHECK(l.front() == 0);
    CHECK(l.back() == 1000);
    CHECK(std::is_sorted(l.begin(), l.end()));
    CHECK(std::adjacent_find(l.begin(), l.end()) == l.end());
}

TEST_CASE("plateau detection on synthetic curves") {
    AutocovCurve c;
    for (int i = 0; i <= 60; ++i) {
        const double tau = std::pow(10.0, -2.0 + i * 0.08);
        c.lags.push_back(tau);
        c.lag_periods.push_back(i);
        // fast exponential drop to a shelf, then a slow decay
        c.values.push_back(0.6 * std::exp(-tau / 0.1) + 0.4 * std::exp(-tau / 500.0));
    }
    const auto p = find_plateau(c);
    CHECK(p.found);
    CHECK(p.tau_begin > 0.1);
    CHECK(p.value == Approx(0.4).epsilon(0.05));

    AutocovCurve e = c;
    for (std::size_t i = 0; i < e.lags.size(); ++i) e.values[i] = std::exp(-e.lags[i]);
    CHECK_FALSE(find_plateau(e).found);
}

TEST_CASE("autocovariance at lag 0 is the total variance") {
    SimConfig c;
    c.population.kind = ModelKind::full;
    c.population.n_agents = 20;
    c.learning.beta = 2.0;
    c.n_periods = 400;
    c.burn_in = 100;
    const auto t = run(c);
    const std::vector<int> lags{0, 1, 10};
    const auto ac = autocovariance(t, lags);
    double mean[4] = {0, 0, 0, 0}, var = 0;
    const double n = double(t.snapshots.size()) * t.n_agents;
    for (std::size_t s = 0; s < t.snapshots.size(); ++s)
        for (int i = 0; i < t.n_agents; ++i)
            for (int k = 0; k < 4; ++k) mean[k] += t.state(s, i, k) / n;
    for (std::size_t s = 0; s < t.snapshots.size(); ++s)
        for (int i = 0; i < t.n_agents; ++i)
            for (int k = 0; k < 4; ++k) var += std::pow(t.state(s, i, k) - mean[k], 2) / n;
    CHECK(ac.values[0] == Approx(var).epsilon(1e-9));
    CHECK(ac.values[2] < ac.values[0]);
    CHECK(ac.lags[1] == Approx(0.1));
    const auto inc = autocovariance(t, lags, AutocovMode::increment);
    CHECK(inc.values[0] == 0.0);
}

TEST_CASE("histogram of a single point") {
    const std::vector<ProjectedAttractions> s(10, {0.5, -0.5});
    const auto h = histogram2d(s, 4, 4);
    double total = 0;
    for (double m : h.mass) total += m;
    CHECK(total == Approx(1.0));
    CHECK(*std::max_element(h.mass.begin(), h.mass.end()) == Approx(1.0));
    CHECK(find_peaks(h).size() == 1);
}

TEST_CASE("four separated clusters give four peaks") {
    Rng rng(4);
    std::vector<ProjectedAttractions> s;
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 5000; ++i)
            s.push_back({(k % 2 ? 1.0 : -1.0) + 0.1 * rng.normal(), (k / 2 ? 1.0 : -1.0) + 0.1 * rng.normal()});
    const auto h = histogram2d(s, sturges_bins(s.size()), sturges_bins(s.size()));
    const auto p = find_peaks(h);
    CHECK(p.size() == 4);
    for (const auto& q : p) CHECK(q.mass == Approx(0.25).epsilon(0.05));
    CHECK(sturges_bins(20000) == 16);
    CHECK(sturges_bins(1) == 2);
}

TEST_CASE("peak masses of a bimodal density") {
    const auto d = tabulate(-4, 4, 2001, [](double x) {
        return 0.3 * oracle::gauss_pdf(x, -1.5, 0.3) + 0.7 * oracle::gauss_pdf(x, 1.5, 0.3);
    });
    const auto m = peak_masses(d);
    REQUIRE(m.size() == 2);
    CHECK(m[0] == Approx(0.3).epsilon(1e-3));
    CHECK(m[1] == Approx(0.7).epsilon(1e-3));
    CHECK(count_modes(d) == 2);
    const auto g = tabulate(-4, 4, 2001, [](double x) { return oracle::gauss_pdf(x, 0, 1); });
    CHECK(count_modes(g) == 1);
}

TEST_CASE("L1 distance between a density and its own samples is small") {
    const auto d = tabulate(-6, 6, 2001, [](double x) { return oracle::gauss_pdf(x, 0, 1); });
    Rng rng(8);
    std::vector<double> s(200000);
    for (double& x : s) x = rng.normal();
    CHECK(l1_distance(d, s, 40) < 0.02);
    std::vector<double> shifted = s;
    for (double& x : shifted) x += 1.0;
    CHECK(l1_distance(d, shifted, 40) > 0.6);
    const std::vector<double> outside(100, 50.0);
    CHECK(l1_distance(d, outside, 40) == Approx(2.0));
}

namespace {

Trajectory synthetic(int periods, int agents, const std::function<double(int, int, int)>& value) {
    Trajectory t;
    t.config.population.kind = ModelKind::full;
    t.config.n_periods = periods;
    t.config.burn_in = 0;
    t.n_agents = agents;
    t.state_dim = 4;
    for (int p = 0; p < periods; ++p) {
        Snapshot s;
        s.period = p;
        for (int i = 0; i < agents; ++i)
            for (int k = 0; k < 4; ++k) s.state.push_back(value(p, i, k));
        s.scores.assign(agents, 0.0);
        t.snapshots.push_back(std::move(s));
    }
    return t;
}

}  // namespace

TEST_CASE("autocovariance of constant and white-noise trajectories") {
    const std::vector<int> lags{0, 1, 5, 20};
    const auto flat = synthetic(100, 5, [](int, int, int) { return 0.7; });
    for (double v : autocovariance(flat, lags).values) CHECK(std::abs(v) < 1e-20);
    for (double v : autocovariance(flat, lags, AutocovMode::increment).values) CHECK(v == 0.0);

    std::mt19937_64 eng(4);
    std::normal_distribution<double> g(0.0, std::sqrt(0.09));
    const auto noise = synthetic(2000, 20, [&](int, int, int) { return g(eng); });
    const auto ac = autocovariance(noise, lags);
    CHECK(ac.values[0] == Approx(4 * 0.09).epsilon(0.02));
    for (std::size_t i = 1; i < lags.size(); ++i) CHECK(std::abs(ac.values[i]) < 0.01);
}

TEST_CASE("average return examples") {
    auto t = synthetic(10, 3, [](int, int, int) { return 0.0; });
    t.mean_return.assign(10, 1.0);
    CHECK(average_return(t) == 1.0);
    for (int p = 0; p < 10; ++p) t.mean_return[p] = p % 2 ? 2.0 : 0.0;
    CHECK(average_return(t) == Approx(1.0));
}
