#pragma once

// Seed splitting. Every random stream in the project is a std::mt19937_64
// seeded from a master seed and a tuple of integer tags:
//
//     h = splitmix64(master)
//     for each tag t:  h = splitmix64(h ^ splitmix64(t + 0x9e3779b97f4a7c15))
//
// so a replicate's stream depends only on (master, tags) and never on the
// order in which replicates are scheduled.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sievelab {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(master);
    for (const std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x9e3779b97f4a7c15ULL));
    return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    return Rng{derive_seed(master, tags)};
}

// Stream tags used across modules.
namespace stream_tag {
inline constexpr std::uint64_t kPool = 0x706f6f6c;        // "pool"
inline constexpr std::uint64_t kCenters = 0x63656e74;     // "cent"
inline constexpr std::uint64_t kReplicate = 0x7265706c;   // "repl"
inline constexpr std::uint64_t kLift = 0x6c696674;        // "lift"
inline constexpr std::uint64_t kProperty = 0x70726f70;    // "prop"
}  // namespace stream_tag

}  // namespace sievelab
