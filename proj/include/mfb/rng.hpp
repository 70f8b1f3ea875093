#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mfb {

/// Deterministic random stream. Wraps mt19937_64 with fixed conversions so
/// sequences are identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  /// Uniform on [0,1) with 53-bit resolution.
  double uniform() { return (double)(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform on [a,b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Integer uniform on {0,...,n-1} via rejection-free scaling (n small).
  int uniform_int(int n) {
    int k = (int)(uniform() * n);
    return k < n ? k : n - 1;
  }

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  std::uint64_t raw() { return eng_(); }

  /// Derive an independent stream (for per-job RNGs).
  Rng split(std::uint64_t stream) const {
    std::mt19937_64 e = eng_;
    std::uint64_t s = e() ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return Rng(s);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mfb
