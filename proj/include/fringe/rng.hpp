#pragma once

#include <cstdint>
#include <random>

namespace fringe {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent stream for replication `stream` of run `seed`. Both words go through
// splitmix64 so neighbouring seeds and streams give unrelated engine states.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream ^ 0x6a09e667f3bcc909ull)));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double exp_rand(Rng& rng, double rate) { return std::exponential_distribution<double>(rate)(rng); }

inline unsigned uniform_index(Rng& rng, unsigned n) {
    return std::uniform_int_distribution<unsigned>(0, n - 1)(rng);
}

}  // namespace fringe
