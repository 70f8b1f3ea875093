#pragma once

#include <string>
#include <vector>

#include "mfb/flow.hpp"
#include "mfb/likelihood.hpp"
#include "mfb/mlp.hpp"
#include "mfb/surrogates.hpp"

namespace mfb {

/// Fixed training hyperparameters for one likelihood method on one
/// benchmark.
struct MethodHyper {
  LayerSpec surrogate;    // dense net (B, C) or latent surrogate (D, E, F)
  LayerSpec autoencoder;  // encoder/decoder spec (D, E, F only)
  double learning_rate = 1e-3;
  double scheduler_step = 0.9999;
  int epochs = 10000;
};

struct FlowHyper {
  FlowArch arch;
  double learning_rate = 1e-3;
  double scheduler_step = 0.9999;
  int epochs = 10000;
};

/// Per-benchmark defaults table.
struct HyperTable {
  std::string id;
  MethodHyper b, c, d, e, f;
  FlowHyper flow;

  const MethodHyper& method(Method m) const;
};

/// Table ids: "analytical", "michalewicz", "borehole", "circuit", plus the
/// Latin-hypercube variants "analytical_lhs"/"michalewicz_lhs" and the
/// sigma-grid flow configuration "rationale".
const HyperTable& hyper_defaults(const std::string& id);
bool has_hyper_table(const std::string& id);

TrainConfig to_train_config(const MethodHyper& h, std::uint64_t seed);
TrainConfig to_train_config(const FlowHyper& h, std::uint64_t seed);

}  // namespace mfb
