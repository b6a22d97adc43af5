#pragma once

#include <cstdint>
#include <random>

namespace crm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Split rule for independent streams: stream `i` of root seed `s` is seeded
/// with splitmix64(splitmix64(s) ^ splitmix64(i + 1)). Every parallel Monte
/// Carlo loop derives per-replicate or per-component engines this way, so
/// results do not depend on the number of worker threads.
constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(root) ^ splitmix64(stream + 1));
}

inline Rng make_stream(std::uint64_t root, std::uint64_t stream) {
  return Rng(derive_seed(root, stream));
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace crm
