#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fedshot {

// splitmix64 finalizer; used both as a stream mixer and to derive
// sub-seeds from (seed, id...) tuples so that every patient / client /
// round gets an independent deterministic stream.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return mix64(seed); }

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t next, Rest... rest) {
    return mix_seed(mix64(seed ^ mix64(next)), rest...);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(mix64(seed));
}

// Uniform double in [0, 1) with 53 random bits. Spelled out here instead of
// std::uniform_real_distribution so the draw sequence is pinned.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Standard normal via Box-Muller, stateless (no cached spare).
inline double gaussian(std::mt19937_64& rng) {
    double u;
    do {
        u = uniform01(rng);
    } while (u <= 0.0);
    const double v = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925287 * v);
}

// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    // multiply-shift; bias is O(n / 2^64), irrelevant at this scale
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Fisher-Yates with the pinned bounded() draw.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct indices drawn without replacement from [0, n).
std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng,
                                                    std::size_t n,
                                                    std::size_t k);

} // namespace fedshot
