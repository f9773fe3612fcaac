#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace twinpot {

// FNV-1a, 64-bit. Stable across runs and platforms; used for content digests
// and for deriving stream-independent RNG seeds.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ull;
    }
  }

  void update(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xffu;
      state_ *= 0x100000001b3ull;
    }
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.value();
}

std::string to_hex(std::uint64_t v);

// SplitMix64 finalizer; spreads entropy of combined seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic sub-seed for a named stream, e.g. derive_seed(seed, "bootstrap").
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return mix64(seed ^ fnv1a64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t n) {
  return mix64(derive_seed(seed, tag) ^ mix64(n));
}

}  // namespace twinpot
