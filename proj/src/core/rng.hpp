#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nlr {

// Deterministic random stream. All distributions are implemented on top of
// the raw mt19937_64 output so that results are pinned by this file alone,
// not by whatever algorithms the standard library ships.
//
// Streams are split by tag: split(t) derives a new stream from the
// constructing seed and t, independent of how many values have been drawn
// from the parent. split(a).split(b) gives a two-level derivation, which the
// harness uses as split(run).split(repeat).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  RngStream split(std::uint64_t tag) const;

  // Raw 64 uniform bits.
  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double();

  // Uniform integer in [0, bound), bound > 0. Rejection sampling, unbiased.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard Box-Muller (cosine branch only, no state carried between calls).
  double next_normal(double mean, double std);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace nlr
