#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace shapetest {

/// All randomness comes from std::mt19937_64 engines seeded through
/// std::seed_seq from (seed, stream, substream). Substreams are independent
/// of thread scheduling, so results do not depend on the thread count.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
    return std::mt19937_64(seq);
}

/// Derives a child seed; used to key Monte Carlo cells and replications.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
    auto eng = make_engine(seed, stream, substream);
    return eng();
}

/// 64-bit FNV-1a, for turning labels into stream ids.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace shapetest
