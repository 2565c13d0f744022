#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace prethermal {

/// SplitMix64 finalizer. Used to derive independent seeds from (base, index).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// stable_hash(base, index) = splitmix64(base ^ splitmix64(index)).
constexpr std::uint64_t stable_hash(std::uint64_t base, std::uint64_t index) noexcept {
    return splitmix64(base ^ splitmix64(index));
}

/**
 * Seeded generator with fully specified output streams.
 *
 * The engine is std::mt19937_64 (whose sequence the standard fixes). Uniform
 * draws take the top 53 bits; normal draws use the Box-Muller transform, one
 * engine call pair per two variates. Distribution objects from <random> are
 * avoided because their algorithms are implementation-defined.
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace prethermal
