#pragma once

// Shared scalar cores and constants for the transcendental kernels.
// Rational approximations follow the classic Cephes forms (Moshier); every
// floating-point operation, including FMA placement and the two-step
// power-of-two scaling, is mirrored exactly by the SIMD variants so that
// scalar and SIMD backends produce bitwise-identical results.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

namespace mfb::kernels::detail {

// exp
inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kExpC1 = 6.93145751953125e-1;
inline constexpr double kExpC2 = 1.42860682030941723212e-6;
inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;
inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;
inline constexpr double kExpHi = 709.782712893383996732;
inline constexpr double kExpLo = -708.396418532264106224;

// log
inline constexpr double kSqrtH = 0.70710678118654752440;
inline constexpr double kLogP[6] = {
    1.01875663804580931796e-4, 4.97494994976747001425e-1, 4.70579119878881725854e0,
    1.44989225341610930846e1,  1.79368678507819816313e1,  7.70838733755885391666e0};
inline constexpr double kLogQ[5] = {
    1.12873587189167450590e1, 4.52279145837532221105e1, 8.29875266912776603211e1,
    7.11544750618563894466e1, 2.31251620126765340583e1};
inline constexpr double kLn2Lo = 2.121944400546905827679e-4;
inline constexpr double kLn2Hi = 0.693359375;

// tanh
inline constexpr double kTanhP[3] = {-9.64399179425052238628e-1, -9.92877231001918586564e1,
                                     -1.61468768441708447952e3};
inline constexpr double kTanhQ[3] = {1.12811678491632931402e2, 2.23548839060100448583e3,
                                     4.84406305325125486048e3};

inline double bits_to_double(std::uint64_t b) {
  double d;
  std::memcpy(&d, &b, sizeof d);
  return d;
}
inline std::uint64_t double_to_bits(double d) {
  std::uint64_t b;
  std::memcpy(&b, &d, sizeof b);
  return b;
}

// 2^k for k in [-1022, 1023], built from the exponent field.
inline double pow2i(int k) { return bits_to_double((std::uint64_t)(k + 1023) << 52); }

inline double exp1(double x) {
  if (std::isnan(x)) return x;
  if (x > kExpHi) return std::numeric_limits<double>::infinity();
  if (x < kExpLo) return 0.0;
  double px = std::floor(std::fma(kLog2E, x, 0.5));
  int n = (int)px;
  double w = std::fma(-px, kExpC1, x);
  w = std::fma(-px, kExpC2, w);
  double xx = w * w;
  double p = w * std::fma(std::fma(kExpP0, xx, kExpP1), xx, kExpP2);
  double q = std::fma(std::fma(std::fma(kExpQ0, xx, kExpQ1), xx, kExpQ2), xx, kExpQ3);
  double e = p / (q - p);
  double r = std::fma(2.0, e, 1.0);
  int a = n >> 1;
  int b = n - a;
  return (r * pow2i(a)) * pow2i(b);
}

inline double log1(double x) {
  if (std::isnan(x)) return x;
  if (x == std::numeric_limits<double>::infinity()) return x;
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
  double e0 = 0.0;
  if (x < 2.2250738585072014e-308) {  // subnormal: renormalize
    x *= 0x1.0p54;
    e0 = -54.0;
  }
  std::uint64_t bits = double_to_bits(x);
  double e = (double)(int)(((bits >> 52) & 0x7ff) - 1022) + e0;
  double m = bits_to_double((bits & 0x000fffffffffffffULL) | (0x3feULL << 52));  // [0.5,1)
  double z;
  if (m < kSqrtH) {
    e -= 1.0;
    z = std::fma(2.0, m, -1.0);
  } else {
    z = m - 1.0;
  }
  double zz = z * z;
  double p = kLogP[0];
  for (int i = 1; i < 6; ++i) p = std::fma(p, z, kLogP[i]);
  double q = z + kLogQ[0];
  for (int i = 1; i < 5; ++i) q = std::fma(q, z, kLogQ[i]);
  double y = z * (zz * p / q);
  y = std::fma(e, -kLn2Lo, y);
  y = std::fma(-0.5, zz, y);
  double r = y + z;
  return std::fma(e, kLn2Hi, r);
}

inline double tanh1(double x) {
  double a = std::fabs(x);
  if (a < 0.625) {  // NaN falls through to the exp branch, matching SIMD blends
    double z = x * x;
    double p = std::fma(std::fma(kTanhP[0], z, kTanhP[1]), z, kTanhP[2]);
    double q = std::fma(std::fma(z + kTanhQ[0], z, kTanhQ[1]), z, kTanhQ[2]);
    return std::fma(x * z, p / q, x);
  }
  double t = 1.0 - 2.0 / (exp1(2.0 * a) + 1.0);
  return std::copysign(t, x);
}

inline double softplus1(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid1(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace mfb::kernels::detail
