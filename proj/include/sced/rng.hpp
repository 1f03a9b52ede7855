#pragma once

#include <cstdint>
#include <random>

namespace sced {

// splitmix64; used to derive independent task seeds from a root seed
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(mix64(seed)); }

inline std::uint64_t task_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
  return mix64(mix64(mix64(root ^ mix64(a)) ^ mix64(b)) ^ mix64(c));
}

}  // namespace sced
