#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qsa {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the stream labeled (label, index) under a master seed:
///   splitmix64(master ^ splitmix64(fnv1a64(label) + index)).
/// Streams with different labels or indices are independent for all
/// practical purposes, and the mapping is stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index) {
  return splitmix64(master ^ splitmix64(fnv1a64(label) + index));
}

inline Engine make_engine(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
  return Engine(derive_seed(master, label, index));
}

// 53-bit uniform in [0, 1); unlike std::uniform_real_distribution the
// output sequence is fixed by the engine alone.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection, also engine-determined.
inline std::uint64_t uniform_below(Engine& engine, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine();
  } while (x >= limit);
  return x % n;
}

}  // namespace qsa
