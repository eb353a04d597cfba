#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace cutnmf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Labeled sub-seed derivation: every random stream in the toolkit hangs off
// one master seed, and a stream's seed depends only on (master, label), not
// on unrelated configuration.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  std::uint64_t state = master ^ fnv1a64(label);
  return splitmix64(state);
}

// Uniform draws with fixed bit-level mappings. std::uniform_*_distribution is
// implementation-defined, so it is avoided everywhere a reproducible stream
// is part of the contract; mt19937_64 itself is specified bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_positive() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  // integer in [0, n); modulo bias is ~n/2^64 and ignored
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace cutnmf
