#pragma once

#include <cstdint>
#include <initializer_list>

namespace udh {

/// Small counter-based generator. Output depends only on the seed, so every
/// sample / layer can own an independent, reproducible stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

 private:
  std::uint64_t state_;
};

template <typename... Ts>
std::uint64_t mix_seed(std::uint64_t seed, Ts... parts) {
  std::uint64_t h = seed;
  for (std::uint64_t p : std::initializer_list<std::uint64_t>{static_cast<std::uint64_t>(parts)...}) {
    SplitMix64 g(h ^ (p + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2)));
    h = g.next();
  }
  return h;
}

}  // namespace udh
