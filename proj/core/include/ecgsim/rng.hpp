#pragma once

#include <cstdint>

namespace ecgsim {

// splitmix64 finalizer; good enough to turn correlated inputs into
// independent-looking seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent sub-seed for stream `stream` of a component seeded
// with `seed`. Every randomness consumer in the toolkit gets its own stream
// so enabling or reordering one never perturbs another.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

} // namespace ecgsim
