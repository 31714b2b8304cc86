#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace cylweb {

/// splitmix64 finalizer; full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Deterministic per-task seed: hash of (master seed, task path).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view task) {
    return mix64(master ^ fnv1a64(task));
}
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index + 0x51ed270b4d2b6a1fULL));
}

/// Counter-based random bit attached to a lattice site. Stateless: the same
/// (seed, x, t) always yields the same sign, so fields extend lazily without
/// storage.
inline int rademacher_at(std::uint64_t seed, std::int64_t x, std::int64_t t) {
    std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(x)));
    h = mix64(h ^ static_cast<std::uint64_t>(t));
    return (h & 1u) ? 1 : -1;
}

/// xoshiro-free simple generator: mt19937_64 is avoided so that every draw
/// is reproducible across standard libraries; all variate transforms are
/// written out explicitly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x2545f4914f6cdd1dULL) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        // splitmix-expanded state for xoshiro256++
        std::uint64_t z = seed;
        for (auto& w : s_) {
            z += 0x9e3779b97f4a7c15ULL;
            w = mix64(z);
        }
        has_cached_normal_ = false;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// uniform on [0,1)
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// uniform on (0,1]; safe as a log() argument
    double u01_pos() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * u01(); }

    /// standard normal via Box-Muller, second value cached
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        const double r = std::sqrt(-2.0 * std::log(u01_pos()));
        const double a = 6.283185307179586476925286766559 * u01();
        cached_normal_ = r * std::sin(a);
        has_cached_normal_ = true;
        return r * std::cos(a);
    }

    /// exponential with the given rate (mean 1/rate)
    double expo(double rate) { return -std::log(u01_pos()) / rate; }

    int rademacher() { return (next() >> 63) ? 1 : -1; }

    /// uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias < 2^-64, irrelevant for simulation use
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace cylweb
