#pragma once

#include <string>
#include <vector>

#include "mfb/mat.hpp"
#include "mfb/mlp.hpp"
#include "mfb/rng.hpp"

namespace mfb {

/// Architecture of the density estimator: for dim >= 2, `blocks` coupling
/// blocks of two affine couplings each, whose scale/translate networks have
/// `layers` hidden layers of `neurons` units. For dim == 1 a stack of 2*blocks
/// monotone stages (affine map + rational-quadratic spline with max(2,
/// neurons) bins) replaces the couplings; `layers` has no scalar analogue.
struct FlowArch {
  int layers = 4;
  int neurons = 8;
  int blocks = 2;
};

/// Residual samples the inflated-noise density is fitted on, with their
/// provenance.
struct NoiseSampleSet {
  Mat deltas;  // J x dim
  std::vector<double> alpha_used;
  std::string surrogate_id;
};

struct AffineCoupling {
  Mat mask;  // 1 x dim of 0/1; masked coordinates pass through
  MlpNet s_net, t_net;
};

struct ScalarStage {
  double log_scale = 0.0, shift = 0.0;  // affine part
  Mat theta_w, theta_h, theta_d;        // unconstrained spline parameters
};

/// Invertible density estimator: an affine-coupling stack for dim >= 2, a
/// monotone scalar-transform stack for dim == 1; base measure is a standard
/// normal. Samples are standardized internally (the Jacobian of that affine
/// map is part of log_density).
class FlowModel {
 public:
  int dim() const { return dim_; }

  double log_density(const double* delta) const;
  double log_density(const std::vector<double>& delta) const;

  /// n draws pushed through the inverse (generative) direction.
  Mat sample(int n, Rng& rng) const;

  /// Normalizing direction on raw inputs: z plus the accumulated
  /// log|det d z / d delta| (standardization included).
  std::vector<double> to_base(const std::vector<double>& delta, double* logdet = nullptr) const;
  /// Generative direction: base point -> raw delta.
  std::vector<double> from_base(const std::vector<double>& z, double* logdet = nullptr) const;

  /// Identity-initialized flow (before any training).
  static FlowModel identity(int dim, const FlowArch& arch, Standardizer std);

  // fitted diagnostics
  double train_loglik = 0, test_loglik = 0;  // mean log-likelihood
  std::vector<double> loglik_history;        // train mean loglik every 100 epochs

  // introspection for serialization and tests
  const FlowArch& arch() const { return arch_; }
  const Standardizer& standardizer() const { return std_; }
  const std::vector<AffineCoupling>& couplings() const { return couplings_; }
  const std::vector<ScalarStage>& stages() const { return stages_; }

  friend FlowModel train_flow(const Mat&, const TrainConfig&, const FlowArch&);
  friend FlowModel flow_from_parts(int dim, FlowArch arch, Standardizer st,
                                   std::vector<AffineCoupling> c, std::vector<ScalarStage> s);

 private:
  int dim_ = 1;
  FlowArch arch_;
  Standardizer std_;
  std::vector<AffineCoupling> couplings_;  // dim >= 2
  std::vector<ScalarStage> stages_;        // dim == 1
};

/// Maximum-likelihood fit on a 75/25 split of the rows of `deltas`.
FlowModel train_flow(const Mat& deltas, const TrainConfig& cfg, const FlowArch& arch);
FlowModel train_flow(const NoiseSampleSet& samples, const TrainConfig& cfg, const FlowArch& arch);

/// Reassemble a flow from serialized parts.
FlowModel flow_from_parts(int dim, FlowArch arch, Standardizer st,
                          std::vector<AffineCoupling> couplings,
                          std::vector<ScalarStage> stages);

}  // namespace mfb
