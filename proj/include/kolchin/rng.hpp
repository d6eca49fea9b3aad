#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kolchin {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent component seeds from one
// root seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based split: the seed for (component, index) is a pure function of
// the root seed, so any cell of a run can be regenerated in isolation.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view component,
                                    std::uint64_t index = 0) {
  return mix64(mix64(root ^ fnv1a64(component)) + index);
}

inline Rng make_rng(std::uint64_t root, std::string_view component,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(root, component, index));
}

inline double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1); safe to take logs of.
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace kolchin
