#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace agmlab {

// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// FNV-1a over the bytes of a purpose tag.
constexpr std::uint64_t tag_word(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent 64-bit seed from a master seed, a purpose tag and
/// up to two indices. All shared randomness in the library flows through here.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t a = 0,
                                    std::uint64_t b = 0) noexcept {
  std::uint64_t h = mix64(master ^ tag_word(tag));
  h = mix64(h + 0x9e3779b97f4a7c15ULL * (a + 1));
  h = mix64(h ^ (0xd1b54a32d192ed03ULL * (b + 1)));
  return h;
}

/// Keyed pseudorandom function on 64-bit codes.
constexpr std::uint64_t keyed_hash(std::uint64_t key, std::uint64_t x) noexcept {
  return mix64(mix64(x ^ key) + std::rotl(key, 29));
}

}  // namespace agmlab
