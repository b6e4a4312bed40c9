#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sleepnet {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent streams from one seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::uint64_t stream) noexcept {
  return mix64(mix64(master) ^ (stream * 0xd6e8feb86659fd93ULL));
}

// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream = 0) {
  return Rng{derive_seed(master, stream)};
}

}  // namespace sleepnet
