#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfb/benchmarks.hpp"
#include "mfb/dataset.hpp"
#include "mfb/dream.hpp"
#include "mfb/flow.hpp"
#include "mfb/grid.hpp"
#include "mfb/hyperparams.hpp"
#include "mfb/likelihood.hpp"
#include "mfb/surrogates.hpp"
#include "mfb/windkessel.hpp"

namespace mfb {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// A fully resolved inference scenario: forward models, prior, synthetic
/// observations and reporting references.
struct Scenario {
  std::string id;        // analytical | michalewicz | borehole | circuit
  std::string hyper_id;  // hyperparameter table
  int dim = 0, outputs = 1;
  std::shared_ptr<const Model> hf, lf;       // hf is wrapped in hf_calls
  std::shared_ptr<CountingModel> hf_calls;   // same object as hf
  PriorSpec prior;
  NoiseSpec noise;
  std::vector<double> lo, hi;
  std::vector<double> reference;  // rescaled-trace reference values
};

/// prior_tag: "default". Borehole also accepts "uniform", "tn0.5", "tn0.1"
/// and "tn0.01" (log10-space truncated normals).
Scenario make_scenario(const std::string& benchmark, const std::string& prior_tag = "default",
                       std::uint64_t obs_seed = 2024);

struct GenerateOptions {
  int n = 100;
  SamplingScheme scheme = SamplingScheme::uniform;
  int lhs_train = 75, lhs_test = 500;  // block design sizes for LHS
  std::uint64_t seed = 0;
};
Dataset generate_dataset(const Scenario& sc, const GenerateOptions& opt);

struct FitOptions {
  Method method = Method::B;
  std::uint64_t seed = 0;
  int epochs_override = -1;  // < 0 keeps the table defaults
  std::string hyper_id;      // empty keeps the scenario table
};

/// Trained artifacts for one method (dense or reduced surrogate; method F
/// additionally carries the per-output scaling and the noise density).
struct FitResult {
  Method method = Method::B;
  bool is_dense = true;
  DenseSurrogate dense;
  NeurAmModel neuram;
  std::shared_ptr<const Model> surrogate_model;  // adapter over whichever was trained
  std::vector<double> alpha;               // method F
  std::shared_ptr<FlowModel> flow;         // method F
  double fit_seconds = 0;
  double test_mse = 0;
  double flow_test_loglik = 0;
};

FitResult fit_method(const Scenario& sc, const Dataset& data, const FitOptions& opt);

/// Likelihood/posterior assembly; fit may be null for method A.
Likelihood build_likelihood(const Scenario& sc, Method method, const FitResult* fit);
Posterior build_posterior(const Scenario& sc, Method method, const FitResult* fit);

// --- persistence -------------------------------------------------------------

void save_fit(const FitResult& fit, const Scenario& sc, const FitOptions& opt,
              const std::string& dir);
FitResult load_fit(const Scenario& sc, Method method, const std::string& dir);

struct PosteriorOptions {
  int grid_res = 100;
  int chains = 5;
  int iters = 10000;
  std::uint64_t seed = 0;
  double gr_threshold = 1.01;
  int n_threads = 1;
  std::string reference;  // method-A artifact: grid file (d<=2) or samples.csv
};

struct PosteriorOutcome {
  bool gridded = false;
  PosteriorGrid grid;
  DreamResult dream;
  double hellinger_vs_a = std::numeric_limits<double>::quiet_NaN();
  double kl_vs_reference = std::numeric_limits<double>::quiet_NaN();
  double cov_trace = std::numeric_limits<double>::quiet_NaN();
  double rescaled_cov_trace = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> cov_diag;
  double posterior_seconds = 0;
  double psrf_max = std::numeric_limits<double>::quiet_NaN();
  bool gr_converged = true;
};

/// Grid path for 1-2 dimensional scenarios (with a method-A reference
/// Hellinger); DREAM path otherwise. Artifacts land in `dir` when non-empty.
PosteriorOutcome run_posterior(const Scenario& sc, Method method, const FitResult* fit,
                               const PosteriorOptions& opt, const std::string& dir = "");

/// Write/read DREAM samples as delimited text (chain, iteration, x.., logp).
void save_samples(const DreamResult& res, int n_chains, const std::string& path);
Mat load_samples(const std::string& path);

// --- manifests ----------------------------------------------------------------

std::string config_hash(const std::string& canonical);
void write_fit_manifest(const std::string& dir, const Scenario& sc, const FitOptions& opt,
                        const FitResult& fit);
void write_posterior_manifest(const std::string& dir, const Scenario& sc, Method method,
                              const PosteriorOptions& opt, const PosteriorOutcome& out);

/// Aggregate posterior manifests into a delimited table (one row per method,
/// mean +/- std over manifests). All manifests must refer to one benchmark.
std::string report_table(const std::vector<std::string>& manifest_paths);

// --- sigma-grid study ---------------------------------------------------------

struct RationaleCell {
  double sigma_model = 0, sigma_noise = 0;
  PosteriorGrid grid;
  double hellinger_vs_a = std::numeric_limits<double>::quiet_NaN();
  double flow_variance = 0;
  double target_variance = 0;
};

/// The inflated-noise rationale study: the low-fidelity model is the
/// high-fidelity one plus frozen level-sigma_model noise, the surrogate is
/// the low-fidelity model itself (alpha = 1), and the density of
/// hf - lf + eta is learned per (sigma_model, sigma_noise) cell.
std::vector<RationaleCell> run_rationale_study(std::uint64_t seed, int n_samples = 10000,
                                               int grid_res = 100,
                                               std::vector<double> sigmas = {0.0, 0.125, 0.25,
                                                                             0.5},
                                               int epochs_override = -1,
                                               const std::string& dir = "");

}  // namespace mfb
