#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dam/random.hpp"

using namespace dam;
using doctest::Approx;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        CHECK(x == b.next());
        differs |= x != c.next();
    }
    CHECK(differs);
}

TEST_CASE("uniform lies in [0, 1) with the right moments") {
    Rng rng(7);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    CHECK(s / n == Approx(0.5).epsilon(0.01));
    CHECK(s2 / n - (s / n) * (s / n) == Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("below is uniform over its range") {
    Rng rng(11);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) counts[rng.below(7)]++;
    double chi2 = 0;
    for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
    CHECK(chi2 < 22.5);  // 6 dof, p ~ 0.001
    CHECK(rng.below(1) == 0);
}

TEST_CASE("normal has unit variance and zero skew") {
    Rng rng(3);
    const int n = 400000;
    double s = 0, s2 = 0, s3 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
        s3 += z * z * z;
        s4 += z * z * z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == Approx(1.0).epsilon(0.01));
    CHECK(std::abs(s3 / n) < 0.03);
    CHECK(s4 / n == Approx(3.0).epsilon(0.03));
    Rng shifted(3);
    CHECK(shifted.normal(10.0, 2.0) == Approx(10.0 + 2.0 * Rng(3).normal()));
}

TEST_CASE("derived seeds are distinct and constexpr") {
    static_assert(derive_seed(1, 0) != derive_seed(1, 1));
    static_assert(splitmix64(0) == 0xe220a8397b1dcdafULL);
    std::vector<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 1000; ++k) seen.push_back(derive_seed(1, k));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}
