#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mfb/mat.hpp"
#include "mfb/rng.hpp"
#include "mfb/tape.hpp"

namespace mfb {

/// Training hyperparameters shared by all gradient-trained models.
struct TrainConfig {
  int epochs = 10000;
  double learning_rate = 1e-3;
  double scheduler_step = 1.0;  // exponential decay factor per epoch
  double weight_decay = 2e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Fully connected network: affine layers with tanh on hidden layers and
/// identity on the output layer.
struct MlpNet {
  std::vector<int> layer_sizes;
  std::vector<Mat> weights;  // [l]: layer_sizes[l] x layer_sizes[l+1]
  std::vector<Mat> biases;   // [l]: 1 x layer_sizes[l+1]

  static MlpNet zeros(const std::vector<int>& sizes);
  /// Glorot-uniform weights, zero biases.
  static MlpNet glorot(const std::vector<int>& sizes, Rng& rng);

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t n_params() const;

  /// Batched forward pass, x is NxIn row-major.
  Mat forward(const Mat& x) const;
  std::vector<double> forward1(const std::vector<double>& x) const;
};

/// Trainable leaves of one network on a tape.
struct TapeNet {
  std::vector<Tape::Id> w, b;
  Tape::Id apply(Tape& t, Tape::Id x) const;
};
TapeNet attach(Tape& t, const MlpNet& net);

/// Hidden-layers x neurons-per-layer architecture tag used by the
/// hyperparameter tables; expand() inserts input/output dims.
struct LayerSpec {
  int hidden_layers = 1;
  int neurons = 8;
  std::vector<int> expand(int in_dim, int out_dim) const;
};

/// Adam with decoupled weight decay. Moments match parameter shapes.
struct AdamState {
  std::vector<Mat> m, v;
  long step = 0;

  static AdamState init(const std::vector<Mat*>& params);
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Learning rate actually applied at a given epoch.
inline double effective_lr(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate * std::pow(cfg.scheduler_step, (double)epoch);
}

/// One optimizer step; effective learning rate is
/// cfg.learning_rate * cfg.scheduler_step^epoch. Throws NumericError with the
/// epoch index on non-finite gradients.
void adam_step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads,
               AdamState& state, const TrainConfig& cfg, int epoch,
               const AdamSettings& s = {});

/// Per-dimension affine normalization fitted on training data.
struct Standardizer {
  std::vector<double> mean, std;

  static Standardizer fit(const Mat& data, double std_floor = 1e-12);
  Mat apply(const Mat& raw) const;
  Mat invert(const Mat& normed) const;
  void apply_inplace(double* row) const;
  void invert_inplace(double* row) const;
  int dim() const { return (int)mean.size(); }
};

}  // namespace mfb
