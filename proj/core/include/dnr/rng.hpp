#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dnr {

// Deterministic random source. Wraps std::mt19937_64 (bit-exact across
// platforms) and supplies its own uniform/normal transforms, because the
// standard <random> distribution objects are not required to produce
// identical streams across standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // Uniform in [0, 1); 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n); n must be positive. Rejection sampling keeps
    // the result exactly uniform and platform-stable.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % n;
    }

    // Standard normal via Box-Muller (single-sample form; consumes exactly
    // two uniforms per call, so streams stay aligned).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));  // 1-u1 in (0,1]
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derive an independent child stream from this stream's seed; the tag is
    // mixed through a splitmix64 finalizer so adjacent tags do not yield
    // correlated child seeds. Does not consume any draws.
    Rng split(std::uint64_t tag) const {
        std::uint64_t z = seed_ ^ (tag + 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace dnr
