#pragma once

#include <string>
#include <vector>

#include "mfb/mat.hpp"
#include "mfb/rng.hpp"

namespace mfb {

enum class SamplingScheme { uniform, latin_hypercube };

/// Paired input / high-fidelity / optional low-fidelity samples with a
/// train/test split.
struct Dataset {
  Mat inputs;  // N x d
  Mat hf;      // N x m
  Mat lf;      // N x m, or empty when no low-fidelity model was evaluated
  std::vector<int> train_idx, test_idx;
  SamplingScheme scheme = SamplingScheme::uniform;

  int n() const { return inputs.rows(); }
  int dim() const { return inputs.cols(); }
  int outputs() const { return hf.cols(); }
  bool has_lf() const { return !lf.empty(); }

  Mat gather_inputs(const std::vector<int>& idx) const;
  Mat gather(const Mat& src, const std::vector<int>& idx) const;

  /// Row counts agree, split indices disjoint and exhaustive.
  void validate() const;

  /// Random 75/25 split (training fraction fixed by the pipeline).
  void make_split(Rng& rng, double train_fraction = 0.75);
  /// Explicit split sizes (first n_train rows train, rest test) for designs
  /// generated as separate train/test batches.
  void make_block_split(int n_train);
};

/// Delimited text with a header row (x1..xd, hf_1..hf_m[, lf_1..lf_m]); the
/// split lives in a "<path>.split" sidecar.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mfb
