#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace moppo {

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and derives all variates with explicit
/// transformations, so results are reproducible across platforms and
/// independent of any library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal variate (Box-Muller, spare cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    std::uint64_t raw() { return gen_(); }

    /// Mixes a list of words into a single 64-bit seed (splitmix64 chain).
    /// Used to derive independent sub-streams from (seed, tag, ...) tuples.
    static std::uint64_t derive(std::initializer_list<std::uint64_t> words) {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (std::uint64_t w : words) {
            h += w + 0x9e3779b97f4a7c15ull;
            std::uint64_t z = h;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            h = z ^ (z >> 31);
        }
        return h;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace moppo
