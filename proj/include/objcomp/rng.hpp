#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace objcomp {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Hashes a key tuple into a 64-bit value. Order-sensitive.
inline constexpr std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x243f6a8885a308d3ull;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

inline constexpr double unit_from_bits(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Counter-based uniform [0,1): the value for a given key tuple never depends on any other draw.
inline double counter_uniform(std::initializer_list<std::uint64_t> keys) {
  return unit_from_bits(mix_keys(keys));
}

/// Sequential generator. Distributions are implemented here so streams are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  static Rng derived(std::initializer_list<std::uint64_t> keys) { return Rng(mix_keys(keys)); }

  std::uint64_t next() { return eng_(); }
  double uniform() { return unit_from_bits(eng_()); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) { return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo + 1))); }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace objcomp
