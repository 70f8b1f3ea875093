#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>

#include "mfb/dataset.hpp"
#include "mfb/mlp.hpp"
#include "mfb/model.hpp"

namespace mfb {

/// What the network learns: the high-fidelity response itself, or the
/// high-minus-low fidelity discrepancy.
enum class Target { direct, discrepancy };

std::string target_name(Target t);
Target target_from_name(const std::string& s);

/// Dense feed-forward surrogate with its normalization statistics.
struct DenseSurrogate {
  MlpNet net;
  Target target = Target::direct;
  Standardizer in_std, out_std;
  double final_train_loss = 0;  // standardized-space MSE at the last epoch
  double train_mse = 0, test_mse = 0;  // raw-scale MSE

  Mat predict(const Mat& x) const;
  std::vector<double> predict1(const std::vector<double>& x) const;
};

DenseSurrogate train_dense(const Dataset& data, Target target, const TrainConfig& cfg,
                           const LayerSpec& arch);

struct NeurAmArch {
  LayerSpec surrogate;  // latent surrogate
  LayerSpec autoencoder;  // encoder and decoder share this spec
};

/// Encoder/decoder/latent-surrogate triple trained jointly on the three-term
/// objective: surrogate error on the encoding, surrogate error on the
/// re-encoded manifold point, and manifold idempotency.
struct NeurAmModel {
  MlpNet encoder, decoder, surrogate;
  Target target = Target::direct;
  Standardizer in_std, out_std;
  int latent_dim = 1;
  std::array<double, 3> train_terms{}, test_terms{};  // standardized space
  double final_train_loss = 0;
  double train_mse = 0, test_mse = 0;  // raw-scale prediction MSE

  Mat predict(const Mat& x) const;  // surrogate(encoder(x)), de-normalized
  std::vector<double> predict1(const std::vector<double>& x) const;
  Mat encode(const Mat& x_raw) const;          // raw inputs -> latent
  Mat decode_to_raw(const Mat& latent) const;  // latent -> raw input space
  /// Re-evaluate the three loss terms on given rows of the dataset.
  std::array<double, 3> eval_terms(const Mat& x_raw, const Mat& labels_raw) const;
};

NeurAmModel train_neuram(const Dataset& data, Target target, const TrainConfig& cfg,
                         const NeurAmArch& arch);

/// Variance-minimizing scaling of a surrogate against high-fidelity values:
/// sample-cov(hf, q) / sample-var(q). Throws NumericError when q is
/// degenerate (zero variance).
double fit_alpha_opt(std::span<const double> hf_vals, std::span<const double> qdagger_vals);

/// Empirical variance of hf - alpha*q over the same samples.
double scaled_residual_variance(std::span<const double> hf_vals,
                                std::span<const double> qdagger_vals, double alpha);

/// Model adapters (the Model output is the surrogate prediction; discrepancy
/// surrogates return only the learned discrepancy).
std::shared_ptr<Model> as_model(DenseSurrogate s);
std::shared_ptr<Model> as_model(NeurAmModel s);

/// Composite q-dagger = lf + delta_surrogate, with per-output alpha applied
/// by the caller.
std::shared_ptr<Model> sum_model(std::shared_ptr<const Model> a, std::shared_ptr<const Model> b);

/// Random search over the admissible hyperparameter ranges (layers 1..10,
/// neurons 1..20, learning rate 1e-5..1e-3 log-uniform, scheduler step
/// 0.999..0.9999). Returns the candidate with the lowest raw test MSE.
struct TuneResult {
  LayerSpec arch;
  double learning_rate = 0;
  double scheduler_step = 0;
  double test_mse = 0;
};
TuneResult random_search_dense(const Dataset& data, Target target, int trials,
                               std::uint64_t seed, int epochs = 2000);

}  // namespace mfb
