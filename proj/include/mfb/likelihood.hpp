#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mfb/flow.hpp"
#include "mfb/mat.hpp"
#include "mfb/model.hpp"
#include "mfb/priors.hpp"

namespace mfb {

/// Likelihood construction tags: A uses the high-fidelity model directly;
/// B/C replace it with a dense surrogate (direct/discrepancy); D/E with the
/// reduced-order surrogate (direct/discrepancy); F scales the discrepancy
/// surrogate and folds measurement noise plus modeling error into a learned
/// density.
enum class Method { A, B, C, D, E, F };

std::string method_name(Method m);
Method method_from_name(const std::string& s);

/// Gaussian measurement-noise description: diagonal covariance (variances)
/// and the observation set.
struct NoiseSpec {
  Mat observations;              // K x m
  std::vector<double> variance;  // m entries, strictly positive

  int n_obs() const { return observations.rows(); }
  int outputs() const { return (int)variance.size(); }
  void validate(bool require_positive_variance = true) const;
};

struct Likelihood {
  Method method = Method::A;
  std::shared_ptr<const Model> hf;         // A
  std::shared_ptr<const Model> lf;         // C, E, F
  std::shared_ptr<const Model> surrogate;  // B, D: response; C, E, F: discrepancy
  std::shared_ptr<const FlowModel> flow;   // F
  std::vector<double> alpha;               // F: per-output scaling
  NoiseSpec noise;

  int input_dim() const;
  int outputs() const { return noise.outputs(); }
  double log_likelihood(const double* x) const;
  double log_likelihood(const std::vector<double>& x) const;
  void validate() const;
};

struct Posterior {
  PriorSpec prior;
  Likelihood likelihood;

  int dim() const { return prior.dim(); }
  /// log prior + log likelihood; -infinity short-circuits without touching
  /// any model.
  double log_posterior(const double* x) const;
  double log_posterior(const std::vector<double>& x) const;
};

/// Synthetic residual set for fitting the inflated-noise density: for each
/// training row, hf - alpha*qdagger plus a fresh draw of the measurement
/// noise.
NoiseSampleSet make_noise_samples(const Mat& hf_vals, const Mat& qdagger_vals,
                                  const std::vector<double>& alpha,
                                  const std::vector<double>& noise_variance, Rng& rng,
                                  const std::string& surrogate_id = "");

}  // namespace mfb
