#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vidpose {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Fixed derivation of a sub-seed from the run seed and a list of tags
/// (stage id, iteration, joint, item index...). Independent of thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x51ed27d4a1f3c2b9ULL));
    return h;
}

/// Stage tags for derive_seed.
enum class Stage : std::uint64_t {
    Synth = 1,
    Initializer,
    Forest,
    Exemplar,
    Spatial,
    Puppet,
    Occlusion,
    Correction,
    KMeans,
    Detector,
};

inline std::uint64_t stage_seed(std::uint64_t seed, Stage s, std::uint64_t a = 0, std::uint64_t b = 0) noexcept {
    return derive_seed(seed, {static_cast<std::uint64_t>(s), a, b});
}

}  // namespace vidpose
