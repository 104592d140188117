#pragma once

// Deterministic random source. The generator is std::mt19937_64 (fully
// specified by the standard, so streams are bit-identical across platforms)
// and normal deviates come from an explicit Box-Muller transform rather than
// std::normal_distribution, whose output is implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "landing/matrix.hpp"

namespace landing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform index in [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

  // Independent child seed for per-run / per-instance streams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static Rng child(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive(seed, stream));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

template <typename T>
Matrix<T> random_gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix<T> m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<T>(rng.normal());
  return m;
}

// Random skew matrix: strictly-lower-triangular i.i.d. N(0, sigma^2) entries,
// antisymmetrized.
template <typename T>
Matrix<T> random_skew(Rng& rng, std::size_t p, T sigma = T(1)) {
  Matrix<T> a(p, p);
  for (std::size_t i = 1; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const T v = sigma * static_cast<T>(rng.normal());
      a(i, j) = v;
      a(j, i) = -v;
    }
  return a;
}

}  // namespace landing
