#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace mdc {

using Rng = std::mt19937_64;

namespace detail {

// splitmix64 finalizer; only used to decorrelate stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Independent generator for sample `index` of a run seeded with `seed`. A
// sample's draws depend only on (seed, index), so any partition of the
// samples across workers reproduces the serial result.
inline Rng stream_for(std::uint64_t seed, std::uint64_t index) {
  return Rng(detail::mix64(seed ^ detail::mix64(index + 0x9e3779b97f4a7c15ULL)));
}

template <class URBG>
double uniform01(URBG& rng) {
  return std::generate_canonical<double, 53>(rng);
}

// Inverse-CDF draw from a probability vector. Falls back to the last symbol
// with positive mass when rounding leaves u above the accumulated total.
template <class URBG>
std::size_t sample_categorical(std::span<const double> probs, URBG& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    last_positive = a;
    acc += probs[a];
    if (u < acc) return a;
  }
  return last_positive;
}

}  // namespace mdc
