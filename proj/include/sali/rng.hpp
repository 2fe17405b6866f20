#pragma once

#include <cstdint>

namespace sali {

// Counter-based splitmix64. Each thread gets its own stream split off a master
// seed, so every Bernoulli draw in the index is reproducible under a fixed
// seed and thread count.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return n ? next() % n : 0; }

  static SplitMix64 split(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mixer(seed ^ (0xd1342543de82ef95ull * (stream + 1)));
    return SplitMix64(mixer.next());
  }

 private:
  std::uint64_t state_;
};

}  // namespace sali
