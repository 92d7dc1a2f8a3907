// Deterministic RNG stream derivation. Every consumer of randomness gets its
// own stream keyed by (seed, tags...), so results never depend on execution
// order or thread scheduling.

#pragma once

#include <cstdint>
#include <random>

namespace fedlf {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

// Stream tags so independent uses of the same (seed, round, id) never collide.
enum class StreamTag : std::uint64_t {
    kModelInit = 1,
    kClientSampling = 2,
    kLocalShuffle = 3,
    kSynthData = 4,
    kSubsample = 5,
    kPartition = 6,
    kEvalData = 7,
    kGradSuite = 8,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, StreamTag tag,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
    return std::mt19937_64(
        mix_seed(seed, static_cast<std::uint64_t>(tag), a, b));
}

}  // namespace fedlf
