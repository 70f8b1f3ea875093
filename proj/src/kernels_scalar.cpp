// Reference kernels. Loop structure, FMA placement and the 4-lane reduction
// layout define the arithmetic contract the SIMD backends reproduce bitwise.

#include <cmath>
#include <cstring>

#include "kernels_math.hpp"
#include "mfb/kernels.hpp"

namespace mfb::kernels {
namespace {

using std::size_t;

void add_s(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_s(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_s(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void div_s(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}
void fmacc_s(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = std::fma(a[i], b[i], out[i]);
}
void divacc_s(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] += a[i] / b[i];
}
void axpy_s(double c, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::fma(c, x[i], y[i]);
}
void scale_s(const double* a, double c, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * c;
}
void add_scalar_s(const double* a, double c, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + c;
}
void tanh_s(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = detail::tanh1(a[i]);
}
void exp_s(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = detail::exp1(a[i]);
}
void log_s(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = detail::log1(a[i]);
}
void sqrt_s(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = std::sqrt(a[i]);
}
void softplus_s(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = detail::softplus1(a[i]);
}
void sigmoid_s(const double* a, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = detail::sigmoid1(a[i]);
}
void grad_tanh_acc_s(const double* g, const double* y, double* da, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    double t = std::fma(-y[i], y[i], 1.0);
    da[i] = std::fma(g[i], t, da[i]);
  }
}

double sum_s(const double* a, size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) {
    acc[0] += a[i];
    acc[1] += a[i + 1];
    acc[2] += a[i + 2];
    acc[3] += a[i + 3];
  }
  for (size_t l = 0; l + t < n; ++l) acc[l] += a[t + l];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot_s(const double* a, const double* b, size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  size_t t = n / 4 * 4;
  for (size_t i = 0; i < t; i += 4) {
    acc[0] = std::fma(a[i], b[i], acc[0]);
    acc[1] = std::fma(a[i + 1], b[i + 1], acc[1]);
    acc[2] = std::fma(a[i + 2], b[i + 2], acc[2]);
    acc[3] = std::fma(a[i + 3], b[i + 3], acc[3]);
  }
  for (size_t l = 0; l + t < n; ++l) acc[l] = std::fma(a[t + l], b[t + l], acc[l]);
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void matmul_nn_s(const double* A, const double* B, double* C, int M, int K, int N) {
  std::memset(C, 0, sizeof(double) * (size_t)M * N);
  for (int i = 0; i < M; ++i) {
    double* ci = C + (size_t)i * N;
    for (int k = 0; k < K; ++k) {
      double aik = A[(size_t)i * K + k];
      const double* bk = B + (size_t)k * N;
      for (int j = 0; j < N; ++j) ci[j] = std::fma(aik, bk[j], ci[j]);
    }
  }
}

void matmul_acc_nt_s(const double* A, const double* B, double* C, int M, int K, int N) {
  for (int i = 0; i < M; ++i) {
    const double* ai = A + (size_t)i * K;
    double* ci = C + (size_t)i * N;
    for (int j = 0; j < N; ++j) ci[j] += dot_s(ai, B + (size_t)j * K, (size_t)K);
  }
}

void matmul_acc_tn_s(const double* A, const double* B, double* C, int M, int K, int N) {
  for (int m = 0; m < M; ++m) {
    const double* gm = B + (size_t)m * N;
    for (int k = 0; k < K; ++k) {
      double amk = A[(size_t)m * K + k];
      double* ck = C + (size_t)k * N;
      for (int j = 0; j < N; ++j) ck[j] = std::fma(amk, gm[j], ck[j]);
    }
  }
}

void colsum_acc_s(const double* A, double* out, int M, int N) {
  for (int i = 0; i < M; ++i) {
    const double* ai = A + (size_t)i * N;
    for (int j = 0; j < N; ++j) out[j] += ai[j];
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops t = {
      .add = add_s,
      .sub = sub_s,
      .mul = mul_s,
      .div = div_s,
      .fmacc = fmacc_s,
      .divacc = divacc_s,
      .axpy = axpy_s,
      .scale = scale_s,
      .add_scalar = add_scalar_s,
      .tanh = tanh_s,
      .exp = exp_s,
      .log = log_s,
      .sqrt = sqrt_s,
      .softplus = softplus_s,
      .sigmoid = sigmoid_s,
      .grad_tanh_acc = grad_tanh_acc_s,
      .sum = sum_s,
      .dot = dot_s,
      .matmul_nn = matmul_nn_s,
      .matmul_acc_nt = matmul_acc_nt_s,
      .matmul_acc_tn = matmul_acc_tn_s,
      .colsum_acc = colsum_acc_s};
  return t;
}

}  // namespace mfb::kernels
