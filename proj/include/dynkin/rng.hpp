#pragma once

// Per-path random substreams. Each (master seed, path index, role) triple
// seeds its own engine, so a path's draws never depend on how paths are
// scheduled across threads.

#include <cstdint>
#include <random>

namespace dynkin {

enum class StreamRole : std::uint32_t { path_noise = 1, uniform_draw = 2, regime_draw = 3 };

using Engine = std::mt19937_64;

/// SplitMix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Engine keyed by a hash of (seed, path, role).
inline Engine make_stream(std::uint64_t seed, std::uint64_t path, StreamRole role) {
    const std::uint64_t key = mix64(mix64(mix64(seed) ^ path) ^ static_cast<std::uint64_t>(role));
    return Engine(key);
}

/// U ~ Uniform[0,1) driving the randomised stopping time of path `path`.
inline double uniform_draw(std::uint64_t seed, std::uint64_t path) {
    auto eng = make_stream(seed, path, StreamRole::uniform_draw);
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

/// Regime label theta ~ Bernoulli(prior) for a physical-measure path.
inline int regime_draw(std::uint64_t seed, std::uint64_t path, double prior) {
    auto eng = make_stream(seed, path, StreamRole::regime_draw);
    return std::bernoulli_distribution(prior)(eng) ? 1 : 0;
}

}  // namespace dynkin
