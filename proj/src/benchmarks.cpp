#include "mfb/benchmarks.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

#include "mfb/errors.hpp"

namespace mfb {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double ipow(double base, int n) {
  double r = 1.0;
  while (n > 0) {
    if (n & 1) r *= base;
    base *= base;
    n >>= 1;
  }
  return r;
}

double analytical_hf(const double* x) {
  return std::exp(0.7 * x[0] + 0.3 * x[1]) + 0.15 * std::sin(2.0 * kPi * x[0]);
}
double analytical_lf(const double* x) {
  return std::exp(0.01 * x[0] + 0.99 * x[1]) + 0.15 * std::sin(3.0 * kPi * x[1]);
}

double michalewicz(const double* x, int d, int m) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    double inner = std::sin((double)(i + 1) * x[i] * x[i] / kPi);
    s += std::sin(x[i]) * ipow(inner, 2 * m);
  }
  return -s;
}

double borehole_hf(const double* x) {
  double rw = x[0], r = x[1], Tu = x[2], Hu = x[3], Tl = x[4], Hl = x[5], L = x[6], Kw = x[7];
  double lnr = std::log(r / rw);
  return 2.0 * kPi * Tu * (Hu - Hl) / (lnr * (1.0 + 2.0 * L * Tu / (lnr * rw * rw * Kw) + Tu / Tl));
}
double borehole_lf(const double* x) {
  double rw = x[0], r = x[1], Tu = x[2], Hu = x[3], Tl = x[4], Hl = x[5], L = x[6], Kw = x[7];
  double lnr = std::log(r / rw);
  return 5.0 * Tu * (Hu - Hl) / (lnr * (1.5 + 2.0 * L * Tu / (lnr * rw * rw * Kw) + Tu / Tl));
}

/// Scalar model with an optional prior-box domain guard.
class GuardedScalarModel : public Model {
 public:
  GuardedScalarModel(int dim, double (*f)(const double*), std::vector<double> lo,
                     std::vector<double> hi, bool strict)
      : dim_(dim), f_(f), lo_(std::move(lo)), hi_(std::move(hi)), strict_(strict) {}
  int input_dim() const override { return dim_; }
  int output_dim() const override { return 1; }
  void eval(const double* x, double* out) const override {
    if (strict_) {
      for (int j = 0; j < dim_; ++j)
        if (x[j] < lo_[j] || x[j] > hi_[j])
          throw DomainError("benchmark evaluation outside the prior box");
    }
    out[0] = f_(x);
  }

 private:
  int dim_;
  double (*f_)(const double*);
  std::vector<double> lo_, hi_;
  bool strict_;
};

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Standard normal frozen per input location: hash the input bits, then one
/// Box-Muller draw.
double hashed_normal(const double* x, int d, std::uint64_t seed) {
  std::uint64_t s = seed ^ 0x2545f4914f6cdd1dULL;
  for (int j = 0; j < d; ++j) {
    std::uint64_t b;
    std::memcpy(&b, &x[j], sizeof b);
    s = splitmix64(s) ^ (b + 0x9e3779b97f4a7c15ULL * (std::uint64_t)(j + 1));
  }
  double u1 = (double)(splitmix64(s) >> 11) * 0x1.0p-53;
  double u2 = (double)(splitmix64(s) >> 11) * 0x1.0p-53;
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace

std::vector<double> BenchmarkPair::midpoint() const {
  std::vector<double> m(dim);
  for (int j = 0; j < dim; ++j) m[j] = 0.5 * (lo[j] + hi[j]);
  return m;
}

BenchmarkPair benchmark_pair(const std::string& name, bool strict_domain) {
  BenchmarkPair p;
  p.name = name;
  if (name == "analytical") {
    p.dim = 2;
    p.lo = {-1, -1};
    p.hi = {1, 1};
    p.hf = std::make_shared<GuardedScalarModel>(2, analytical_hf, p.lo, p.hi, strict_domain);
    p.lf = std::make_shared<GuardedScalarModel>(2, analytical_lf, p.lo, p.hi, strict_domain);
  } else if (name == "michalewicz") {
    p.dim = 2;
    p.lo = {0, 0};
    p.hi = {kPi, kPi};
    p.hf = std::make_shared<GuardedScalarModel>(
        2, +[](const double* x) { return michalewicz(x, 2, 10); }, p.lo, p.hi, strict_domain);
    p.lf = std::make_shared<GuardedScalarModel>(
        2, +[](const double* x) { return michalewicz(x, 2, 1); }, p.lo, p.hi, strict_domain);
  } else if (name == "borehole") {
    p.dim = 8;
    p.lo = {0.05, 100, 63070, 990, 63.1, 700, 1120, 9855};
    p.hi = {0.15, 50000, 115600, 1110, 116, 820, 1680, 12045};
    p.hf = std::make_shared<GuardedScalarModel>(8, borehole_hf, p.lo, p.hi, strict_domain);
    p.lf = std::make_shared<GuardedScalarModel>(8, borehole_lf, p.lo, p.hi, strict_domain);
  } else {
    throw ConfigError("unknown benchmark: " + name);
  }
  return p;
}

BenchmarkPair analytical_noisy_pair(double sigma_model, std::uint64_t seed) {
  BenchmarkPair p = benchmark_pair("analytical");
  p.name = "analytical-noisy";
  p.lf = std::make_shared<FunctionModel>(2, 1, [sigma_model, seed](const double* x, double* out) {
    out[0] = analytical_hf(x) + sigma_model * (sigma_model > 0 ? hashed_normal(x, 2, seed) : 0.0);
  });
  return p;
}

bool is_benchmark(const std::string& name) {
  return name == "analytical" || name == "michalewicz" || name == "borehole";
}

std::vector<std::string> benchmark_names() { return {"analytical", "michalewicz", "borehole"}; }

}  // namespace mfb
