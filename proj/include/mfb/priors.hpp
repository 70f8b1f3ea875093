#pragma once

#include <string>
#include <vector>

#include "mfb/rng.hpp"

namespace mfb {

enum class PriorKind { uniform_box, log_uniform_box, truncated_normal };

std::string prior_kind_name(PriorKind k);
PriorKind prior_kind_from_name(const std::string& s);

/// Box-supported prior. Log-densities are unnormalized (constants dropped);
/// outside the box the log-density is -infinity.
struct PriorSpec {
  PriorKind kind = PriorKind::uniform_box;
  std::vector<double> lo, hi;
  // truncated_normal only: mean and per-dimension std, optionally acting in
  // log10 coordinates
  std::vector<double> mean, sigma;
  bool log10_space = false;

  static PriorSpec uniform(std::vector<double> lo, std::vector<double> hi);
  static PriorSpec log_uniform(std::vector<double> lo, std::vector<double> hi);
  static PriorSpec truncated_normal(std::vector<double> lo, std::vector<double> hi,
                                    std::vector<double> mean, std::vector<double> sigma,
                                    bool log10_space = false);

  int dim() const { return (int)lo.size(); }
  bool inside(const double* x) const;
  double log_density(const double* x) const;
  std::vector<double> sample(Rng& rng) const;
  void validate() const;
};

}  // namespace mfb
