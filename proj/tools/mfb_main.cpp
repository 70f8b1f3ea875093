// Command-line front end: dataset generation, surrogate/flow training,
// posterior evaluation/sampling and report aggregation.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mfb/checkpoint.hpp"
#include "mfb/errors.hpp"
#include "mfb/experiment.hpp"
#include "mfb/kernels.hpp"

namespace fs = std::filesystem;
using namespace mfb;

namespace {

std::string default_out_root() {
  if (const char* env = std::getenv("MFBAYES_OUT")) return env;
  return "mfbayes_out";
}

int run(int argc, char** argv) {
  CLI::App app{"multifidelity Bayesian inference toolkit"};
  app.set_config("--config", "", "configuration file (TOML/INI); flags override it");
  app.require_subcommand(1);

  std::string benchmark = "analytical";
  std::string prior_tag = "default";
  std::string out_dir;
  std::uint64_t seed = 0, obs_seed = 2024;
  std::string method_str = "B";
  int epochs = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--benchmark", benchmark,
                    "analytical | michalewicz | borehole | circuit | rationale");
    cmd->add_option("--prior", prior_tag, "prior tag (borehole: uniform, tn0.5, tn0.1, tn0.01)");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--obs-seed", obs_seed, "seed of the synthetic observation draws");
    cmd->add_option("--out", out_dir, "output directory (default $MFBAYES_OUT)");
  };

  // generate
  auto* gen = app.add_subcommand("generate", "sample inputs and evaluate both models");
  int n = 100, lhs_train = 75, lhs_test = 500;
  std::string scheme = "uniform";
  add_common(gen);
  gen->add_option("--n", n, "dataset size (uniform sampling)");
  gen->add_option("--scheme", scheme, "uniform | lhs");
  gen->add_option("--lhs-train", lhs_train, "LHS training design size");
  gen->add_option("--lhs-test", lhs_test, "LHS testing design size");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "train the method's surrogate (and flow for F)");
  std::string data_path;
  std::string hyper_id;
  int tune_trials = 0;
  add_common(fit_cmd);
  fit_cmd->add_option("--method", method_str, "B | C | D | E | F");
  fit_cmd->add_option("--data", data_path, "dataset file from `generate`")->required();
  fit_cmd->add_option("--hyper", hyper_id, "hyperparameter table id override");
  fit_cmd->add_option("--epochs", epochs, "epoch-count override");
  fit_cmd->add_option("--tune", tune_trials,
                      "run a random hyperparameter search with this many trials and exit");

  // posterior
  auto* post_cmd = app.add_subcommand("posterior", "evaluate the posterior on a grid or sample it");
  std::string fit_dir, reference;
  int grid_res = 100, chains = 5, iters = 10000, threads = 1;
  double gr_threshold = 1.01;
  add_common(post_cmd);
  post_cmd->add_option("--method", method_str, "A | B | C | D | E | F");
  post_cmd->add_option("--fit", fit_dir, "directory with checkpoints from `fit`");
  post_cmd->add_option("--reference", reference,
                       "method-A grid file or samples.csv for the comparison column");
  post_cmd->add_option("--grid-res", grid_res, "grid nodes per dimension");
  post_cmd->add_option("--chains", chains, "DREAM chains");
  post_cmd->add_option("--iters", iters, "DREAM iterations");
  post_cmd->add_option("--gr-threshold", gr_threshold, "Gelman-Rubin warning threshold");
  post_cmd->add_option("--threads", threads, "concurrent posterior evaluations");

  // report
  auto* rep_cmd = app.add_subcommand("report", "aggregate posterior manifests into a table");
  std::vector<std::string> manifests;
  std::string table_out;
  rep_cmd->add_option("manifests", manifests, "posterior_manifest.json files")->required();
  rep_cmd->add_option("--out", table_out, "write the table here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (out_dir.empty()) out_dir = default_out_root();

  if (gen->parsed()) {
    if (benchmark == "rationale")
      throw ConfigError("the rationale study generates its own data; use `posterior`");
    Scenario sc = make_scenario(benchmark, prior_tag, obs_seed);
    GenerateOptions opt;
    opt.n = n;
    opt.seed = seed;
    opt.scheme = scheme == "lhs" ? SamplingScheme::latin_hypercube : SamplingScheme::uniform;
    opt.lhs_train = lhs_train;
    opt.lhs_test = lhs_test;
    Dataset ds = generate_dataset(sc, opt);
    fs::create_directories(out_dir);
    std::string path = out_dir + "/dataset.csv";
    save_dataset(ds, path);
    std::printf("wrote %s (%d rows: %zu train / %zu test, %ld high-fidelity calls)\n",
                path.c_str(), ds.n(), ds.train_idx.size(), ds.test_idx.size(),
                sc.hf_calls->count());
    return 0;
  }

  if (fit_cmd->parsed()) {
    Scenario sc = make_scenario(benchmark, prior_tag, obs_seed);
    Dataset ds = load_dataset(data_path);
    Method method = method_from_name(method_str);
    if (tune_trials > 0) {
      Target target = (method == Method::B || method == Method::D) ? Target::direct
                                                                   : Target::discrepancy;
      TuneResult r = random_search_dense(ds, target, tune_trials, seed,
                                         epochs > 0 ? epochs : 2000);
      std::printf("random search (%d trials): layers=%d neurons=%d lr=%.6g zeta=%.6g "
                  "test_mse=%.6g\n",
                  tune_trials, r.arch.hidden_layers, r.arch.neurons, r.learning_rate,
                  r.scheduler_step, r.test_mse);
      return 0;
    }
    FitOptions opt;
    opt.method = method;
    opt.seed = seed;
    opt.epochs_override = epochs;
    opt.hyper_id = hyper_id;
    FitResult fit = fit_method(sc, ds, opt);
    save_fit(fit, sc, opt, out_dir);
    std::printf("method %s: test MSE %.6g", method_str.c_str(), fit.test_mse);
    if (method == Method::F) {
      std::printf(", alpha = [");
      for (std::size_t j = 0; j < fit.alpha.size(); ++j)
        std::printf("%s%.6g", j ? ", " : "", fit.alpha[j]);
      std::printf("], flow test loglik %.4f", fit.flow_test_loglik);
    }
    std::printf(" (%.1f s) -> %s\n", fit.fit_seconds, out_dir.c_str());
    return 0;
  }

  if (post_cmd->parsed()) {
    if (benchmark == "rationale") {
      auto cells = run_rationale_study(seed, 10000, grid_res, {0.0, 0.125, 0.25, 0.5}, epochs,
                                       out_dir);
      std::printf("sigma-grid study: %zu posterior grids -> %s\n", cells.size(),
                  out_dir.c_str());
      for (const auto& c : cells) {
        std::printf("  sigma_model=%.3f sigma_noise=%.3f flow_var=%.5f target=%.5f", c.sigma_model,
                    c.sigma_noise, c.flow_variance, c.target_variance);
        if (std::isfinite(c.hellinger_vs_a)) std::printf(" hellinger_vs_A=%.4f", c.hellinger_vs_a);
        std::printf("\n");
      }
      return 0;
    }
    Scenario sc = make_scenario(benchmark, prior_tag, obs_seed);
    Method method = method_from_name(method_str);
    FitResult fit;
    const FitResult* fit_ptr = nullptr;
    if (method != Method::A) {
      if (fit_dir.empty()) throw ConfigError("posterior: methods B-F need --fit <dir>");
      fit = load_fit(sc, method, fit_dir);
      fit_ptr = &fit;
    }
    sc.hf_calls->reset();
    PosteriorOptions opt;
    opt.grid_res = grid_res;
    opt.chains = chains;
    opt.iters = iters;
    opt.seed = seed;
    opt.gr_threshold = gr_threshold;
    opt.n_threads = threads;
    opt.reference = reference;
    PosteriorOutcome out = run_posterior(sc, method, fit_ptr, opt, out_dir);
    long hf_calls = sc.hf_calls->count();
    if (method != Method::A && hf_calls != 0)
      throw NumericError("posterior: unexpected high-fidelity calls on the inference path");
    if (out.gridded) {
      std::printf("grid %dx: trace %.6g", grid_res, out.cov_trace);
      if (std::isfinite(out.hellinger_vs_a)) std::printf(", hellinger vs A %.4f", out.hellinger_vs_a);
    } else {
      std::printf("dream: %d chains x %d iters, psrf %.4f%s", chains, iters, out.psrf_max,
                  out.gr_converged ? "" : " (not converged)");
      if (std::isfinite(out.kl_vs_reference)) std::printf(", kl vs reference %.4f", out.kl_vs_reference);
    }
    std::printf(", %ld high-fidelity calls, %.1f s -> %s\n", hf_calls, out.posterior_seconds,
                out_dir.c_str());
    return 0;
  }

  if (rep_cmd->parsed()) {
    std::string table = report_table(manifests);
    if (table_out.empty()) {
      std::fputs(table.c_str(), stdout);
    } else {
      std::ofstream f(table_out);
      if (!f) throw ConfigError("report: cannot write " + table_out);
      f << table;
      std::printf("wrote %s\n", table_out.c_str());
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
