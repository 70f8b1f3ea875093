#pragma once

#include <span>

#include "mfb/mat.hpp"

namespace mfb {

/// Sample Pearson correlation. Throws NumericError on degenerate input.
double pearson(std::span<const double> a, std::span<const double> b);

/// k-nearest-neighbor estimate of KL(p || q) from samples: (d/N) sum_i
/// log(nu_k(i)/rho_k(i)) + log(M/(N-1)), with rho_k the k-NN radius of p_i
/// inside samples_p (self excluded) and nu_k inside samples_q. Both sets are
/// standardized per dimension by the pooled standard deviation; zero radii
/// from duplicate points are floored with a warning.
double knn_kl_divergence(const Mat& samples_p, const Mat& samples_q, int k);

}  // namespace mfb
