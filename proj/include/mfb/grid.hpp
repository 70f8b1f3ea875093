#pragma once

#include <vector>

#include "mfb/likelihood.hpp"
#include "mfb/mat.hpp"

namespace mfb {

/// Tensor-product evaluation of an unnormalized posterior, normalized by
/// trapezoidal quadrature. Axes span the prior box with inclusive endpoints;
/// the flattened tensor is row-major with the last axis fastest.
struct PosteriorGrid {
  std::vector<std::vector<double>> axes;
  std::vector<double> logv;     // unnormalized log-posterior
  std::vector<double> density;  // normalized
  double integral_check = 0.0;  // quadrature of `density`, should be ~1

  std::size_t size() const { return density.size(); }
  int dim() const { return (int)axes.size(); }
  double node_weight(std::size_t flat) const;
  std::vector<double> node_coords(std::size_t flat) const;
  std::size_t argmax_density() const;

  std::vector<double> mean() const;
  Mat covariance() const;
  double covariance_trace() const;
  /// trace of M^-1 C M^-1 with M = diag(reference)
  double rescaled_covariance_trace(const std::vector<double>& reference) const;
};

/// Evaluate the posterior at every node (d <= 3).
PosteriorGrid grid_posterior(const Posterior& post, const std::vector<int>& resolution);

/// sqrt(1/2 * sum w (sqrt(rho1) - sqrt(rho2))^2) over identical axes.
double hellinger(const PosteriorGrid& a, const PosteriorGrid& b);

/// Save/load in a small self-describing text format (axes + density + logv).
void save_grid(const PosteriorGrid& g, const std::string& path);
PosteriorGrid load_grid(const std::string& path);

}  // namespace mfb
