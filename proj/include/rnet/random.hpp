#pragma once

#include <cstdint>
#include <random>

namespace rnet {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// Substream identifiers used by derive_seed. Each stream can be re-seeded
/// independently of the others for the same realisation seed.
enum class Stream : std::uint64_t {
    Graph = 0,
    Terminals = 1,  // terminal triple and theta0
    Tasks = 2,
    DistanceOutput = 3,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based split: a pure function of (seed, stream, index).
inline constexpr Seed derive_seed(Seed seed, Stream stream, std::uint64_t index = 0) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (static_cast<std::uint64_t>(stream) + 0x632be59bd9b4e019ULL));
    return splitmix64(h ^ (index * 0xd6e8feb86659fd93ULL + 1));
}

inline Rng make_rng(Seed seed) { return Rng{seed}; }

}  // namespace rnet
