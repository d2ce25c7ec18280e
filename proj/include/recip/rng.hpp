#pragma once

#include <cstdint>
#include <initializer_list>

namespace recip {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream tags so independent consumers of the same master seed never collide.
namespace stream {
constexpr std::uint64_t kDyad = 0xd1ad;
constexpr std::uint64_t kNodeX = 0xc0471;
constexpr std::uint64_t kNodeY = 0xc0472;
constexpr std::uint64_t kDyadV = 0xc0473;
constexpr std::uint64_t kReplicate = 0x5eed;
}  // namespace stream

// Counter-style RNG: a splitmix64 stream whose key is derived by hashing a
// chain of words, e.g. (seed, tag, i, j). Output for a given key sequence is
// a pure function of the words, so draws are independent of evaluation order
// and of how work is split across threads.
class KeyedRng {
 public:
  explicit KeyedRng(std::uint64_t key) : state_(key) {}

  static std::uint64_t derive(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x9368e53c2f6af274ull;
    for (std::uint64_t w : words) h = mix64(h ^ w);
    return h;
  }

  static KeyedRng from(std::initializer_list<std::uint64_t> words) {
    return KeyedRng(derive(words));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace recip
