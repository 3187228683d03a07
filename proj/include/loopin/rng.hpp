// Deterministic RNG: splitmix64 core with hand-rolled distributions so
// streams are reproducible independent of the standard library build.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "loopin/hash.hpp"

namespace loopin {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Decorrelated substream for a named purpose.
    static Rng derive(std::uint64_t seed, std::string_view stream) {
        Sha256 h;
        h.update("loopin.rng.stream");
        h.update_u64(seed);
        h.update(stream);
        return Rng(hash_to_u64(h.finish()));
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n); n > 0. Rejection-free modulo is fine here: the
    // bias at simulation ranges is far below anything we assert on.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { // inclusive
        return lo + below(hi - lo + 1);
    }

    double unit() { // [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Knuth's product method; rates in this simulator are small.
    std::uint64_t poisson(double rate) {
        const double limit = std::exp(-rate);
        double prod = 1.0;
        std::uint64_t k = 0;
        do {
            prod *= unit();
            ++k;
        } while (prod > limit);
        return k - 1;
    }

    // Box-Muller, one value per call.
    double normal(double mean, double sigma) {
        double u1 = unit();
        while (u1 <= 0.0) u1 = unit();
        const double u2 = unit();
        const double z = std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * 3.14159265358979323846 * u2);
        return mean + sigma * z;
    }

private:
    std::uint64_t state_;
};

} // namespace loopin
