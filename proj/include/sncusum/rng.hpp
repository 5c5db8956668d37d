#pragma once

#include <cstdint>
#include <random>

namespace sncusum {

using Engine = std::mt19937_64;

// SplitMix64 finalizer; used only to derive well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent engine for replication `index` of a run seeded with `seed`.
// Every Monte-Carlo loop draws from stream_engine(seed, i) for replication i,
// so results never depend on how replications are scheduled across threads.
inline Engine stream_engine(std::uint64_t seed, std::uint64_t index) {
    return Engine{mix64(mix64(seed) ^ mix64(index + 0x632BE59BD9B4E019ULL))};
}

}  // namespace sncusum
