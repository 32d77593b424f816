#include "core/rng.hpp"

#include <cmath>

#include "core/common.hpp"

namespace nlr {

namespace {

// splitmix64 finalizer; used to decorrelate seeds derived from (seed, tag).
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

RngStream RngStream::split(std::uint64_t tag) const {
  return RngStream(mix64(seed_ ^ mix64(tag + 0x6a09e667f3bcc909ULL)));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw_internal("RngStream::next_below: bound must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

double RngStream::next_normal(double mean, double std) {
  if (std < 0.0) throw_config("next_normal: negative std");
  if (std == 0.0) {
    // Keep the stream position consistent with the general case.
    next_u64();
    next_u64();
    return mean;
  }
  const double u1 = next_double();
  const double u2 = next_double();
  // 1-u1 lies in (0,1]; log of it is finite.
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  const double z = r * std::cos(2.0 * M_PI * u2);
  return mean + std * z;
}

}  // namespace nlr
