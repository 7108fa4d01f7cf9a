// rng.hpp — deterministic random streams.
//
// All randomness in the project flows through SplitMix64 seeded from the run
// seed and a fixed stream tag, so a (config, seed) pair fully determines
// every numerical output independent of platform and standard library.

#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace betheform {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  SplitMix64(std::uint64_t seed, std::string_view stream_tag) : state(seed ^ fnv1a64(stream_tag)) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform over the disk |z - center| <= radius.
  std::complex<double> in_disk(std::complex<double> center, double radius) {
    const double r = radius * std::sqrt(uniform());
    const double phi = 2.0 * std::numbers::pi * uniform();
    return center + std::complex<double>(r * std::cos(phi), r * std::sin(phi));
  }

  // Uniform angle, modulus in [lo, hi].
  std::complex<double> in_annulus(double lo, double hi) {
    const double r = uniform(lo, hi);
    const double phi = 2.0 * std::numbers::pi * uniform();
    return {r * std::cos(phi), r * std::sin(phi)};
  }
};

}  // namespace betheform
