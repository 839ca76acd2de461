// random.hpp - portable seeded generator and seed splitting.
//
// std::mt19937_64 output is fixed by the standard, but the standard
// distributions are not, so uniforms, normals and bounded integers are
// derived here to keep runs bitwise reproducible across toolchains.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dam {

inline constexpr std::string_view kGeneratorName = "mt19937_64/polar-normal/splitmix64-seeds";

// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of stream `stream` derived from `base`: splitmix64(base ^ splitmix64(stream)).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // Uniform integer in [0, n), rejection sampled; n > 0.
    std::uint64_t below(std::uint64_t n);
    // Standard normal by the Marsaglia polar method.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dam
