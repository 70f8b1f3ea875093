// AVX2+FMA kernels. Bitwise-equivalent to the scalar reference: identical
// operation order, FMA placement, reduction layout and polynomial forms.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "kernels_math.hpp"
#include "mfb/kernels.hpp"

namespace mfb::kernels {
namespace {

using std::size_t;
namespace d = detail;

inline __m256d vset1(double x) { return _mm256_set1_pd(x); }

// --- elementwise -----------------------------------------------------------

template <class VOp, class SOp>
inline void ew_binary(const double* a, const double* b, double* out, size_t n, VOp vop, SOp sop) {
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4)
    _mm256_storeu_pd(out + i, vop(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (size_t i = t; i < n; ++i) out[i] = sop(a[i], b[i]);
}

void add_v(const double* a, const double* b, double* out, size_t n) {
  ew_binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
            [](double x, double y) { return x + y; });
}
void sub_v(const double* a, const double* b, double* out, size_t n) {
  ew_binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
            [](double x, double y) { return x - y; });
}
void mul_v(const double* a, const double* b, double* out, size_t n) {
  ew_binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
            [](double x, double y) { return x * y; });
}
void div_v(const double* a, const double* b, double* out, size_t n) {
  ew_binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_div_pd(x, y); },
            [](double x, double y) { return x / y; });
}
void fmacc_v(const double* a, const double* b, double* out, size_t n) {
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) {
    __m256d o = _mm256_loadu_pd(out + i);
    o = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), o);
    _mm256_storeu_pd(out + i, o);
  }
  for (size_t i = t; i < n; ++i) out[i] = std::fma(a[i], b[i], out[i]);
}
void divacc_v(const double* a, const double* b, double* out, size_t n) {
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) {
    __m256d q = _mm256_div_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), q));
  }
  for (size_t i = t; i < n; ++i) out[i] += a[i] / b[i];
}
void axpy_v(double c, const double* x, double* y, size_t n) {
  __m256d vc = vset1(c);
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) {
    __m256d o = _mm256_fmadd_pd(vc, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, o);
  }
  for (size_t i = t; i < n; ++i) y[i] = std::fma(c, x[i], y[i]);
}
void scale_v(const double* a, double c, double* out, size_t n) {
  __m256d vc = vset1(c);
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vc));
  for (size_t i = t; i < n; ++i) out[i] = a[i] * c;
}
void add_scalar_v(const double* a, double c, double* out, size_t n) {
  __m256d vc = vset1(c);
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), vc));
  for (size_t i = t; i < n; ++i) out[i] = a[i] + c;
}
void grad_tanh_acc_v(const double* g, const double* y, double* da, size_t n) {
  __m256d one = vset1(1.0);
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    __m256d tv = _mm256_fnmadd_pd(yv, yv, one);
    __m256d o = _mm256_fmadd_pd(_mm256_loadu_pd(g + i), tv, _mm256_loadu_pd(da + i));
    _mm256_storeu_pd(da + i, o);
  }
  for (size_t i = t; i < n; ++i) {
    double tv = std::fma(-y[i], y[i], 1.0);
    da[i] = std::fma(g[i], tv, da[i]);
  }
}

// --- transcendentals --------------------------------------------------------

// 2^k per lane from 32-bit integer exponents (valid for |k| <= 1022).
inline __m256d pow2i_v(__m128i k) {
  __m256i k64 = _mm256_cvtepi32_epi64(k);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_castsi256_pd(bits);
}

inline __m256d exp_core(__m256d x) {
  __m256d px = _mm256_floor_pd(_mm256_fmadd_pd(vset1(d::kLog2E), x, vset1(0.5)));
  __m128i n = _mm256_cvttpd_epi32(px);
  __m256d w = _mm256_fnmadd_pd(px, vset1(d::kExpC1), x);
  w = _mm256_fnmadd_pd(px, vset1(d::kExpC2), w);
  __m256d xx = _mm256_mul_pd(w, w);
  __m256d p = _mm256_fmadd_pd(vset1(d::kExpP0), xx, vset1(d::kExpP1));
  p = _mm256_fmadd_pd(p, xx, vset1(d::kExpP2));
  p = _mm256_mul_pd(w, p);
  __m256d q = _mm256_fmadd_pd(vset1(d::kExpQ0), xx, vset1(d::kExpQ1));
  q = _mm256_fmadd_pd(q, xx, vset1(d::kExpQ2));
  q = _mm256_fmadd_pd(q, xx, vset1(d::kExpQ3));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  __m256d r = _mm256_fmadd_pd(vset1(2.0), e, vset1(1.0));
  __m128i a = _mm_srai_epi32(n, 1);
  __m128i b = _mm_sub_epi32(n, a);
  r = _mm256_mul_pd(_mm256_mul_pd(r, pow2i_v(a)), pow2i_v(b));
  // range clamps; NaN lanes keep the propagated NaN from the main path
  __m256d inf = vset1(std::numeric_limits<double>::infinity());
  r = _mm256_blendv_pd(r, inf, _mm256_cmp_pd(x, vset1(d::kExpHi), _CMP_GT_OQ));
  r = _mm256_blendv_pd(r, _mm256_setzero_pd(), _mm256_cmp_pd(x, vset1(d::kExpLo), _CMP_LT_OQ));
  return r;
}

inline __m256d log_core(__m256d x) {
  const __m256d two54 = vset1(0x1.0p54);
  __m256d sub_mask =
      _mm256_and_pd(_mm256_cmp_pd(x, vset1(2.2250738585072014e-308), _CMP_LT_OQ),
                    _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GT_OQ));
  __m256d xs = _mm256_blendv_pd(x, _mm256_mul_pd(x, two54), sub_mask);
  __m256d e0 = _mm256_and_pd(sub_mask, vset1(-54.0));

  __m256i bits = _mm256_castpd_si256(xs);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  expo = _mm256_and_si256(expo, _mm256_set1_epi64x(0x7ff));
  expo = _mm256_sub_epi64(expo, _mm256_set1_epi64x(1022));
  // exponents are small; pack via double conversion per lane
  alignas(32) long long ei[4];
  _mm256_store_si256((__m256i*)ei, expo);
  __m256d e = _mm256_add_pd(
      _mm256_set_pd((double)ei[3], (double)ei[2], (double)ei[1], (double)ei[0]), e0);
  __m256i mant = _mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL)),
      _mm256_set1_epi64x(0x3feLL << 52));
  __m256d m = _mm256_castsi256_pd(mant);

  __m256d small = _mm256_cmp_pd(m, vset1(d::kSqrtH), _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(small, vset1(1.0)));
  __m256d z_small = _mm256_fmadd_pd(vset1(2.0), m, vset1(-1.0));
  __m256d z_big = _mm256_sub_pd(m, vset1(1.0));
  __m256d z = _mm256_blendv_pd(z_big, z_small, small);

  __m256d zz = _mm256_mul_pd(z, z);
  __m256d p = vset1(d::kLogP[0]);
  for (int i = 1; i < 6; ++i) p = _mm256_fmadd_pd(p, z, vset1(d::kLogP[i]));
  __m256d q = _mm256_add_pd(z, vset1(d::kLogQ[0]));
  for (int i = 1; i < 5; ++i) q = _mm256_fmadd_pd(q, z, vset1(d::kLogQ[i]));
  __m256d y = _mm256_mul_pd(z, _mm256_div_pd(_mm256_mul_pd(zz, p), q));
  y = _mm256_fmadd_pd(e, vset1(-d::kLn2Lo), y);
  y = _mm256_fmadd_pd(vset1(-0.5), zz, y);
  __m256d r = _mm256_add_pd(y, z);
  r = _mm256_fmadd_pd(e, vset1(d::kLn2Hi), r);

  // specials: x=0 -> -inf, x<0 -> NaN, x=+inf -> +inf, NaN -> NaN
  __m256d minf = vset1(-std::numeric_limits<double>::infinity());
  __m256d pinf = vset1(std::numeric_limits<double>::infinity());
  __m256d qnan = vset1(std::numeric_limits<double>::quiet_NaN());
  r = _mm256_blendv_pd(r, minf, _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_EQ_OQ));
  r = _mm256_blendv_pd(r, qnan, _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ));
  r = _mm256_blendv_pd(r, pinf, _mm256_cmp_pd(x, pinf, _CMP_EQ_OQ));
  r = _mm256_blendv_pd(r, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  return r;
}

inline __m256d tanh_core(__m256d x) {
  const __m256d sign_mask = vset1(-0.0);
  __m256d a = _mm256_andnot_pd(sign_mask, x);
  // polynomial branch, |x| < 0.625
  __m256d z = _mm256_mul_pd(x, x);
  __m256d p = _mm256_fmadd_pd(vset1(d::kTanhP[0]), z, vset1(d::kTanhP[1]));
  p = _mm256_fmadd_pd(p, z, vset1(d::kTanhP[2]));
  __m256d q = _mm256_add_pd(z, vset1(d::kTanhQ[0]));
  q = _mm256_fmadd_pd(q, z, vset1(d::kTanhQ[1]));
  q = _mm256_fmadd_pd(q, z, vset1(d::kTanhQ[2]));
  __m256d poly = _mm256_fmadd_pd(_mm256_mul_pd(x, z), _mm256_div_pd(p, q), x);
  // exp branch
  __m256d ex = exp_core(_mm256_add_pd(a, a));
  __m256d t = _mm256_sub_pd(vset1(1.0), _mm256_div_pd(vset1(2.0), _mm256_add_pd(ex, vset1(1.0))));
  __m256d signed_t = _mm256_or_pd(t, _mm256_and_pd(x, sign_mask));
  __m256d small = _mm256_cmp_pd(a, vset1(0.625), _CMP_LT_OQ);
  return _mm256_blendv_pd(signed_t, poly, small);
}

void tanh_v(const double* a, double* out, size_t n) {
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) _mm256_storeu_pd(out + i, tanh_core(_mm256_loadu_pd(a + i)));
  for (size_t i = t; i < n; ++i) out[i] = d::tanh1(a[i]);
}
void exp_v(const double* a, double* out, size_t n) {
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) _mm256_storeu_pd(out + i, exp_core(_mm256_loadu_pd(a + i)));
  for (size_t i = t; i < n; ++i) out[i] = d::exp1(a[i]);
}
void log_v(const double* a, double* out, size_t n) {
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) _mm256_storeu_pd(out + i, log_core(_mm256_loadu_pd(a + i)));
  for (size_t i = t; i < n; ++i) out[i] = d::log1(a[i]);
}
void sqrt_v(const double* a, double* out, size_t n) {
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) _mm256_storeu_pd(out + i, _mm256_sqrt_pd(_mm256_loadu_pd(a + i)));
  for (size_t i = t; i < n; ++i) out[i] = std::sqrt(a[i]);
}
void softplus_v(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = d::softplus1(a[i]);
}
void sigmoid_v(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = d::sigmoid1(a[i]);
}

// --- reductions -------------------------------------------------------------

double sum_v(const double* a, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (size_t l = 0; l + t < n; ++l) lanes[l] += a[t + l];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_v(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (size_t l = 0; l + t < n; ++l) lanes[l] = std::fma(a[t + l], b[t + l], lanes[l]);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

// --- matrix products ---------------------------------------------------------

void matmul_nn_v(const double* A, const double* B, double* C, int M, int K, int N) {
  std::memset(C, 0, sizeof(double) * (size_t)M * N);
  int t = N / 4 * 4;
  for (int i = 0; i < M; ++i) {
    double* ci = C + (size_t)i * N;
    for (int k = 0; k < K; ++k) {
      double aik = A[(size_t)i * K + k];
      const double* bk = B + (size_t)k * N;
      __m256d va = vset1(aik);
      for (int j = 0; j < t; j += 4) {
        __m256d c = _mm256_fmadd_pd(va, _mm256_loadu_pd(bk + j), _mm256_loadu_pd(ci + j));
        _mm256_storeu_pd(ci + j, c);
      }
      for (int j = t; j < N; ++j) ci[j] = std::fma(aik, bk[j], ci[j]);
    }
  }
}

void matmul_acc_nt_v(const double* A, const double* B, double* C, int M, int K, int N) {
  for (int i = 0; i < M; ++i) {
    const double* ai = A + (size_t)i * K;
    double* ci = C + (size_t)i * N;
    for (int j = 0; j < N; ++j) ci[j] += dot_v(ai, B + (size_t)j * K, (size_t)K);
  }
}

void matmul_acc_tn_v(const double* A, const double* B, double* C, int M, int K, int N) {
  int t = N / 4 * 4;
  for (int m = 0; m < M; ++m) {
    const double* gm = B + (size_t)m * N;
    for (int k = 0; k < K; ++k) {
      double amk = A[(size_t)m * K + k];
      double* ck = C + (size_t)k * N;
      __m256d va = vset1(amk);
      for (int j = 0; j < t; j += 4) {
        __m256d c = _mm256_fmadd_pd(va, _mm256_loadu_pd(gm + j), _mm256_loadu_pd(ck + j));
        _mm256_storeu_pd(ck + j, c);
      }
      for (int j = t; j < N; ++j) ck[j] = std::fma(amk, gm[j], ck[j]);
    }
  }
}

void colsum_acc_v(const double* A, double* out, int M, int N) {
  int t = N / 4 * 4;
  for (int i = 0; i < M; ++i) {
    const double* ai = A + (size_t)i * N;
    for (int j = 0; j < t; j += 4)
      _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(ai + j)));
    for (int j = t; j < N; ++j) out[j] += ai[j];
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops t = {
      .add = add_v,
      .sub = sub_v,
      .mul = mul_v,
      .div = div_v,
      .fmacc = fmacc_v,
      .divacc = divacc_v,
      .axpy = axpy_v,
      .scale = scale_v,
      .add_scalar = add_scalar_v,
      .tanh = tanh_v,
      .exp = exp_v,
      .log = log_v,
      .sqrt = sqrt_v,
      .softplus = softplus_v,
      .sigmoid = sigmoid_v,
      .grad_tanh_acc = grad_tanh_acc_v,
      .sum = sum_v,
      .dot = dot_v,
      .matmul_nn = matmul_nn_v,
      .matmul_acc_nt = matmul_acc_nt_v,
      .matmul_acc_tn = matmul_acc_tn_v,
      .colsum_acc = colsum_acc_v};
  return t;
}

}  // namespace mfb::kernels

#endif  // x86_64
