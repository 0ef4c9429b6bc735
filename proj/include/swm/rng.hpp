#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "swm/types.hpp"

namespace swm {

// Counter-based uniform generator: output i of stream `key` is a fixed mix of
// key + i * golden-gamma, so draws depend only on (key, index) and substreams
// can be evaluated in any order on any thread with identical results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    // Uniform in the open interval (0, 1).
    double uniform() {
        const std::uint64_t bits = mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull);
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; caches the paired draw.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec gaussian_vec(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Labeled stream derivation: FNV-1a over the label folded into the seed, so a
// new label never perturbs the draws of an existing one.
inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ull ^ (seed * 0x100000001B3ull + 0x9E3779B97F4A7C15ull);
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    h ^= seed + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view label,
                                   std::uint64_t index) {
    std::uint64_t h = derive_stream(seed, label);
    h ^= (index + 1) * 0xD1B54A32D192ED03ull;
    h ^= h >> 32;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 29;
    return h;
}

}  // namespace swm
