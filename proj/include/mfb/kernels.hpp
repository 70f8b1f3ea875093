#pragma once

#include <cstddef>
#include <string>

namespace mfb::kernels {

/// Instruction-set variants. All variants follow one fixed arithmetic
/// contract (operation order, FMA placement, 4-lane reduction layout), so
/// results are bitwise identical across them.
enum class Backend { scalar, avx2 };

/// Kernel function table. Arrays may alias only where the implementation is
/// elementwise (add/sub/mul/div/scale/unary); reductions and matmuls assume
/// distinct output storage.
struct Ops {
  // elementwise binary: out[i] = a[i] (op) b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*div)(const double* a, const double* b, double* out, std::size_t n);
  // accumulating: out[i] += ...
  void (*fmacc)(const double* a, const double* b, double* out, std::size_t n);   // += a*b
  void (*divacc)(const double* a, const double* b, double* out, std::size_t n);  // += a/b
  void (*axpy)(double c, const double* x, double* y, std::size_t n);             // y += c*x
  // scalar broadcasts
  void (*scale)(const double* a, double c, double* out, std::size_t n);      // out = c*a
  void (*add_scalar)(const double* a, double c, double* out, std::size_t n); // out = a+c
  // elementwise unary
  void (*tanh)(const double* a, double* out, std::size_t n);
  void (*exp)(const double* a, double* out, std::size_t n);
  void (*log)(const double* a, double* out, std::size_t n);
  void (*sqrt)(const double* a, double* out, std::size_t n);
  void (*softplus)(const double* a, double* out, std::size_t n);
  void (*sigmoid)(const double* a, double* out, std::size_t n);
  // da[i] += g[i] * (1 - y[i]^2), y = tanh output
  void (*grad_tanh_acc)(const double* g, const double* y, double* da, std::size_t n);
  // reductions (4-lane interleaved accumulators, combined (0+1)+(2+3))
  double (*sum)(const double* a, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // row-major matrix products
  //   matmul_nn:     C(MxN)  = A(MxK) * B(KxN)
  //   matmul_acc_nt: C(MxN) += A(MxK) * B(NxK)^T
  //   matmul_acc_tn: C(KxN) += A(MxK)^T * B(MxN)
  void (*matmul_nn)(const double* A, const double* B, double* C, int M, int K, int N);
  void (*matmul_acc_nt)(const double* A, const double* B, double* C, int M, int K, int N);
  void (*matmul_acc_tn)(const double* A, const double* B, double* C, int M, int K, int N);
  // out(1xN) += column sums of A(MxN)
  void (*colsum_acc)(const double* A, double* out, int M, int N);
};

/// Active kernel table.
const Ops& ops();

Backend active_backend();
std::string backend_name(Backend b);
bool backend_supported(Backend b);

/// Select a backend explicitly; throws CapabilityError if unsupported on
/// this CPU. Environment variable MFB_KERNELS=scalar|avx2 overrides the
/// default pick at startup. Not thread-safe against concurrent kernel use.
void set_backend(Backend b);

}  // namespace mfb::kernels
