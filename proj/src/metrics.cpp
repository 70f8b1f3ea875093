#include "mfb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "mfb/errors.hpp"
#include "mfb/kernels.hpp"

namespace mfb {

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson: size mismatch");
  std::size_t n = a.size();
  if (n < 2) throw ConfigError("pearson: need at least 2 samples");
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= (double)n;
  mb /= (double)n;
  double cab = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    cab += da * db;
    va += da * da;
    vb += db * db;
  }
  if (!(va > 0) || !(vb > 0)) throw NumericError("pearson: degenerate input (zero variance)");
  return std::clamp(cab / std::sqrt(va * vb), -1.0, 1.0);
}

double knn_kl_divergence(const Mat& samples_p, const Mat& samples_q, int k) {
  int n = samples_p.rows(), mrows = samples_q.rows(), d = samples_p.cols();
  if (samples_q.cols() != d) throw ShapeError("knn_kl_divergence: dimension mismatch");
  if (k < 1 || n <= k || mrows <= k)
    throw ConfigError("knn_kl_divergence: need N, M > k >= 1");

  // pooled per-dimension standardization keeps scales comparable
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  long total = n + mrows;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) mean[j] += samples_p(i, j);
  for (int i = 0; i < mrows; ++i)
    for (int j = 0; j < d; ++j) mean[j] += samples_q(i, j);
  for (int j = 0; j < d; ++j) mean[j] /= (double)total;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      double c = samples_p(i, j) - mean[j];
      sd[j] += c * c;
    }
  for (int i = 0; i < mrows; ++i)
    for (int j = 0; j < d; ++j) {
      double c = samples_q(i, j) - mean[j];
      sd[j] += c * c;
    }
  for (int j = 0; j < d; ++j) {
    sd[j] = std::sqrt(sd[j] / (double)(total - 1));
    if (sd[j] < 1e-300) sd[j] = 1.0;
  }

  Mat P(n, d), Q(mrows, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) P(i, j) = (samples_p(i, j) - mean[j]) / sd[j];
  for (int i = 0; i < mrows; ++i)
    for (int j = 0; j < d; ++j) Q(i, j) = (samples_q(i, j) - mean[j]) / sd[j];

  const auto& K = kernels::ops();
  std::vector<double> dist(std::max(n, mrows));
  std::vector<double> diff(d);
  long zero_radii = 0;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* xi = P.row_ptr(i);
    // k-th NN within P, excluding the point itself
    for (int r = 0; r < n; ++r) {
      K.sub(xi, P.row_ptr(r), diff.data(), (std::size_t)d);
      dist[r] = K.dot(diff.data(), diff.data(), (std::size_t)d);
    }
    dist[i] = std::numeric_limits<double>::infinity();
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.begin() + n);
    double rho2 = dist[k - 1];
    // k-th NN within Q
    for (int r = 0; r < mrows; ++r) {
      K.sub(xi, Q.row_ptr(r), diff.data(), (std::size_t)d);
      dist[r] = K.dot(diff.data(), diff.data(), (std::size_t)d);
    }
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.begin() + mrows);
    double nu2 = dist[k - 1];
    if (rho2 <= 0 || nu2 <= 0) {
      ++zero_radii;
      const double jitter = 1e-24;  // squared infinitesimal tie-break
      rho2 = std::max(rho2, jitter);
      nu2 = std::max(nu2, jitter);
    }
    acc += 0.5 * (std::log(nu2) - std::log(rho2));
  }
  if (zero_radii > 0)
    std::fprintf(stderr, "knn_kl_divergence: %ld duplicate points, jitter applied\n", zero_radii);
  return (double)d / (double)n * acc + std::log((double)mrows / (double)(n - 1));
}

}  // namespace mfb
