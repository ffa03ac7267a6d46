#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qsplit::rng {

// SplitMix64 mixing step, used only to derive stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed domains. Ordering streams, problem generation, and ensemble members
// draw from disjoint domains so that one consumer never perturbs another.
enum class StreamLabel : std::uint64_t {
    ordering = 0x6f726472,
    problem = 0x70726f62,
    ensemble = 0x656e7362,
};

inline std::uint64_t derive_seed(std::uint64_t base, StreamLabel label,
                                 std::uint64_t index = 0) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64(s);
    s ^= static_cast<std::uint64_t>(label) + 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= index + 0xda942042e4dd58b5ULL;
    h ^= splitmix64(s);
    return h;
}

/// Seeded uniform stream on [0,1).
///
/// The generator is std::mt19937_64 (named and versioned by the C++
/// standard); the mapping takes the top 53 bits, so the emitted doubles do
/// not depend on the standard library's distribution implementation.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller on the same stream.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - next();  // (0,1], keeps the log finite
        double u2 = next();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace qsplit::rng
