#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mfb/model.hpp"

namespace mfb {

/// Closed-form high/low fidelity model pair with its input box.
struct BenchmarkPair {
  std::string name;
  int dim = 0;
  int outputs = 1;
  std::vector<double> lo, hi;
  std::shared_ptr<const Model> hf, lf;

  std::vector<double> midpoint() const;
};

/// Built-in pairs: "analytical" (2-D), "michalewicz" (2-D), "borehole" (8-D).
/// strict_domain makes out-of-box evaluations throw DomainError.
BenchmarkPair benchmark_pair(const std::string& name, bool strict_domain = false);

/// The noise-corrupted variant used by the sigma-grid study: the low-fidelity
/// model is the analytical high-fidelity model plus spatially uncorrelated
/// N(0, sigma_model^2) noise, frozen per location via hashing so evaluations
/// are deterministic.
BenchmarkPair analytical_noisy_pair(double sigma_model, std::uint64_t seed);

bool is_benchmark(const std::string& name);
std::vector<std::string> benchmark_names();

}  // namespace mfb
