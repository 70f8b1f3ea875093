#include "mfb/experiment.hpp"

#include <chrono>
#include <limits>
#include <cstdio>
#include <map>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mfb/checkpoint.hpp"
#include "mfb/errors.hpp"
#include "mfb/metrics.hpp"
#include "mfb/sampling.hpp"

namespace mfb {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

NoiseSpec single_observation(double y, double sigma) {
  NoiseSpec n;
  n.observations.resize(1, 1);
  n.observations(0, 0) = y;
  n.variance = {sigma * sigma};
  return n;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Scenario make_scenario(const std::string& benchmark, const std::string& prior_tag,
                       std::uint64_t obs_seed) {
  Scenario sc;
  sc.id = benchmark;
  sc.hyper_id = benchmark;

  if (benchmark == "circuit") {
    auto inflow = InflowWaveform::default_aortic();
    sc.dim = 3;
    sc.outputs = 3;
    auto hf_raw = windkessel_model(WindkesselKind::rcr, inflow);
    sc.hf_calls = std::make_shared<CountingModel>(hf_raw);
    sc.hf = sc.hf_calls;
    sc.lf = windkessel_model(WindkesselKind::rc, inflow);
    sc.lo = {500, 500, 1e-5};
    sc.hi = {1500, 1500, 1e-4};
    sc.prior = PriorSpec::log_uniform(sc.lo, sc.hi);
    sc.reference = {1000, 1000, 5e-5};
    // synthetic observations around the QoIs of the reference parameters
    std::vector<double> qoi = hf_raw->operator()(sc.reference);
    sc.hf_calls->reset();
    sc.noise.variance = {5.05, 7.40, 5.83};
    sc.noise.observations.resize(50, 3);
    Rng rng(obs_seed);
    for (int k = 0; k < 50; ++k)
      for (int j = 0; j < 3; ++j)
        sc.noise.observations(k, j) = qoi[j] + rng.normal(0.0, std::sqrt(sc.noise.variance[j]));
    if (prior_tag != "default" && !prior_tag.empty())
      throw ConfigError("circuit scenario has a fixed log-uniform prior");
    return sc;
  }

  BenchmarkPair pair = benchmark_pair(benchmark);
  sc.dim = pair.dim;
  sc.outputs = 1;
  sc.hf_calls = std::make_shared<CountingModel>(pair.hf);
  sc.hf = sc.hf_calls;
  sc.lf = pair.lf;
  sc.lo = pair.lo;
  sc.hi = pair.hi;
  sc.reference = pair.midpoint();

  if (benchmark == "analytical") {
    sc.prior = PriorSpec::uniform(sc.lo, sc.hi);
    sc.noise = single_observation(1.3547, 0.1);
  } else if (benchmark == "michalewicz") {
    sc.prior = PriorSpec::uniform(sc.lo, sc.hi);
    sc.noise = single_observation(1.8133, 0.05);
  } else if (benchmark == "borehole") {
    double m = pair.hf->operator()(sc.reference)[0];
    sc.hf_calls->reset();
    double sigma = 0.7;
    sc.noise.variance = {sigma * sigma};
    sc.noise.observations.resize(100, 1);
    Rng rng(obs_seed);
    for (int k = 0; k < 100; ++k) sc.noise.observations(k, 0) = rng.normal(m, sigma);
    if (prior_tag == "default" || prior_tag == "uniform" || prior_tag.empty()) {
      sc.prior = PriorSpec::uniform(sc.lo, sc.hi);
    } else if (prior_tag.rfind("tn", 0) == 0) {
      double sigma_log = std::stod(prior_tag.substr(2));
      std::vector<double> sig(8, sigma_log);
      sc.prior = PriorSpec::truncated_normal(sc.lo, sc.hi, sc.reference, sig, true);
    } else {
      throw ConfigError("unknown borehole prior tag: " + prior_tag);
    }
    return sc;
  } else {
    throw ConfigError("unknown benchmark: " + benchmark);
  }
  if (prior_tag != "default" && !prior_tag.empty() && prior_tag != "uniform")
    throw ConfigError("benchmark " + benchmark + " supports only the uniform prior");
  return sc;
}

Dataset generate_dataset(const Scenario& sc, const GenerateOptions& opt) {
  Dataset ds;
  ds.scheme = opt.scheme;
  Rng rng(opt.seed);
  if (opt.scheme == SamplingScheme::uniform) {
    if (opt.n < 4) throw ConfigError("generate_dataset: need at least 4 samples");
    ds.inputs = sample_uniform_box(sc.lo, sc.hi, opt.n, rng);
    ds.hf.resize(opt.n, sc.outputs);
    ds.lf.resize(opt.n, sc.outputs);
    for (int i = 0; i < opt.n; ++i) {
      sc.hf->eval(ds.inputs.row_ptr(i), ds.hf.row_ptr(i));
      sc.lf->eval(ds.inputs.row_ptr(i), ds.lf.row_ptr(i));
    }
    ds.make_split(rng);
  } else {
    Mat train = latin_hypercube_maximin(sc.lo, sc.hi, opt.lhs_train, rng);
    Mat test = latin_hypercube_maximin(sc.lo, sc.hi, opt.lhs_test, rng);
    int n = opt.lhs_train + opt.lhs_test;
    ds.inputs.resize(n, sc.dim);
    for (int i = 0; i < opt.lhs_train; ++i)
      for (int j = 0; j < sc.dim; ++j) ds.inputs(i, j) = train(i, j);
    for (int i = 0; i < opt.lhs_test; ++i)
      for (int j = 0; j < sc.dim; ++j) ds.inputs(opt.lhs_train + i, j) = test(i, j);
    ds.hf.resize(n, sc.outputs);
    ds.lf.resize(n, sc.outputs);
    for (int i = 0; i < n; ++i) {
      sc.hf->eval(ds.inputs.row_ptr(i), ds.hf.row_ptr(i));
      sc.lf->eval(ds.inputs.row_ptr(i), ds.lf.row_ptr(i));
    }
    ds.make_block_split(opt.lhs_train);
  }
  ds.validate();
  return ds;
}

FitResult fit_method(const Scenario& sc, const Dataset& data, const FitOptions& opt) {
  if (opt.method == Method::A)
    throw ConfigError("method A has nothing to fit: it uses the high-fidelity model directly");
  const HyperTable& table = hyper_defaults(opt.hyper_id.empty() ? sc.hyper_id : opt.hyper_id);
  const MethodHyper& hyper = table.method(opt.method);

  FitResult fit;
  fit.method = opt.method;
  double t0 = now_seconds();

  TrainConfig cfg = to_train_config(hyper, opt.seed);
  if (opt.epochs_override > 0) cfg.epochs = opt.epochs_override;

  switch (opt.method) {
    case Method::B:
      fit.is_dense = true;
      fit.dense = train_dense(data, Target::direct, cfg, hyper.surrogate);
      fit.test_mse = fit.dense.test_mse;
      fit.surrogate_model = as_model(fit.dense);
      break;
    case Method::C:
      fit.is_dense = true;
      fit.dense = train_dense(data, Target::discrepancy, cfg, hyper.surrogate);
      fit.test_mse = fit.dense.test_mse;
      fit.surrogate_model = as_model(fit.dense);
      break;
    case Method::D:
      fit.is_dense = false;
      fit.neuram = train_neuram(data, Target::direct, cfg,
                                {hyper.surrogate, hyper.autoencoder});
      fit.test_mse = fit.neuram.test_mse;
      fit.surrogate_model = as_model(fit.neuram);
      break;
    case Method::E:
    case Method::F:
      fit.is_dense = false;
      fit.neuram = train_neuram(data, Target::discrepancy, cfg,
                                {hyper.surrogate, hyper.autoencoder});
      fit.test_mse = fit.neuram.test_mse;
      fit.surrogate_model = as_model(fit.neuram);
      break;
    default:
      throw ConfigError("fit_method: bad method");
  }

  if (opt.method == Method::F) {
    // scaled surrogate: per-output variance-minimizing alpha over the
    // training rows (reusing the stored evaluations; no new model calls)
    int m = sc.outputs;
    Mat hf_tr = data.gather(data.hf, data.train_idx);
    Mat qd_tr((int)data.train_idx.size(), m);
    for (std::size_t i = 0; i < data.train_idx.size(); ++i) {
      int r = data.train_idx[i];
      std::vector<double> x(data.inputs.row_ptr(r), data.inputs.row_ptr(r) + data.dim());
      auto dd = fit.neuram.predict1(x);
      for (int j = 0; j < m; ++j) qd_tr((int)i, j) = data.lf(r, j) + dd[j];
    }
    fit.alpha.resize(m);
    for (int j = 0; j < m; ++j) {
      std::vector<double> h(hf_tr.rows()), q(hf_tr.rows());
      for (int i = 0; i < hf_tr.rows(); ++i) {
        h[i] = hf_tr(i, j);
        q[i] = qd_tr(i, j);
      }
      fit.alpha[j] = fit_alpha_opt(h, q);
    }
    Rng noise_rng(cfg.seed ^ 0x5eedULL);
    NoiseSampleSet residuals = make_noise_samples(hf_tr, qd_tr, fit.alpha, sc.noise.variance,
                                                  noise_rng, method_name(opt.method));
    TrainConfig fcfg = to_train_config(table.flow, opt.seed);
    if (opt.epochs_override > 0) fcfg.epochs = opt.epochs_override;
    fit.flow = std::make_shared<FlowModel>(train_flow(residuals, fcfg, table.flow.arch));
    fit.flow_test_loglik = fit.flow->test_loglik;
  }

  fit.fit_seconds = now_seconds() - t0;
  return fit;
}

Likelihood build_likelihood(const Scenario& sc, Method method, const FitResult* fit) {
  Likelihood lik;
  lik.method = method;
  lik.noise = sc.noise;
  switch (method) {
    case Method::A:
      lik.hf = sc.hf;
      break;
    case Method::B:
    case Method::D:
      if (!fit) throw ConfigError("build_likelihood: fit artifacts required");
      lik.surrogate = fit->surrogate_model;
      break;
    case Method::C:
    case Method::E:
      if (!fit) throw ConfigError("build_likelihood: fit artifacts required");
      lik.lf = sc.lf;
      lik.surrogate = fit->surrogate_model;
      break;
    case Method::F:
      if (!fit) throw ConfigError("build_likelihood: fit artifacts required");
      lik.lf = sc.lf;
      lik.surrogate = fit->surrogate_model;
      lik.flow = fit->flow;
      lik.alpha = fit->alpha;
      break;
  }
  lik.validate();
  return lik;
}

Posterior build_posterior(const Scenario& sc, Method method, const FitResult* fit) {
  Posterior post;
  post.prior = sc.prior;
  post.likelihood = build_likelihood(sc, method, fit);
  return post;
}

void save_fit(const FitResult& fit, const Scenario& sc, const FitOptions& opt,
              const std::string& dir) {
  fs::create_directories(dir);
  TrainConfig cfg = to_train_config(
      hyper_defaults(opt.hyper_id.empty() ? sc.hyper_id : opt.hyper_id).method(fit.method),
      opt.seed);
  if (opt.epochs_override > 0) cfg.epochs = opt.epochs_override;
  if (fit.is_dense)
    save_dense(fit.dense, cfg, dir + "/surrogate.ckpt");
  else
    save_neuram(fit.neuram, cfg, dir + "/surrogate.ckpt");
  if (fit.method == Method::F) {
    const HyperTable& table =
        hyper_defaults(opt.hyper_id.empty() ? sc.hyper_id : opt.hyper_id);
    TrainConfig fcfg = to_train_config(table.flow, opt.seed);
    if (opt.epochs_override > 0) fcfg.epochs = opt.epochs_override;
    save_flow(*fit.flow, fcfg, dir + "/flow.ckpt");
  }
  write_fit_manifest(dir, sc, opt, fit);
}

FitResult load_fit(const Scenario& sc, Method method, const std::string& dir) {
  FitResult fit;
  fit.method = method;
  std::string ck = dir + "/surrogate.ckpt";
  std::string kind = checkpoint_kind(ck);
  if (kind == "dense") {
    fit.is_dense = true;
    fit.dense = load_dense(ck);
    fit.test_mse = fit.dense.test_mse;
    fit.surrogate_model = as_model(fit.dense);
  } else {
    fit.is_dense = false;
    fit.neuram = load_neuram(ck);
    fit.test_mse = fit.neuram.test_mse;
    fit.surrogate_model = as_model(fit.neuram);
  }
  if (method == Method::F) {
    fit.flow = std::make_shared<FlowModel>(load_flow(dir + "/flow.ckpt"));
    fit.flow_test_loglik = fit.flow->test_loglik;
    std::ifstream in(dir + "/fit_manifest.json");
    if (!in) throw ConfigError("load_fit: missing fit manifest in " + dir);
    json j = json::parse(in);
    fit.alpha = j.at("metrics").at("alpha").get<std::vector<double>>();
  }
  return fit;
}

void save_samples(const DreamResult& res, int n_chains, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_samples: cannot write " + path);
  int d = res.history.dim;
  out << "chain,iteration";
  for (int j = 0; j < d; ++j) out << ",x" << (j + 1);
  out << ",log_posterior\n";
  int start = res.history.n_iter / 2;
  for (int it = start; it < res.history.n_iter; ++it)
    for (int c = 0; c < n_chains; ++c) {
      out << c << "," << it;
      for (int j = 0; j < d; ++j) out << "," << fmt17(res.history.state(it, c, j));
      out << "," << fmt17(res.history.lp(it, c)) << "\n";
    }
}

Mat load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_samples: cannot open " + path);
  std::string header;
  std::getline(in, header);
  int cols = 1;
  for (char ch : header)
    if (ch == ',') ++cols;
  int d = cols - 3;
  if (d < 1) throw ConfigError("load_samples: malformed header in " + path);
  std::vector<double> vals;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    int k = 0;
    while (std::getline(ls, tok, ',')) {
      if (k >= 2 && k < 2 + d) vals.push_back(std::stod(tok));
      ++k;
    }
    ++rows;
  }
  Mat m(rows, d);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = vals[i];
  return m;
}

PosteriorOutcome run_posterior(const Scenario& sc, Method method, const FitResult* fit,
                               const PosteriorOptions& opt, const std::string& dir) {
  Posterior post = build_posterior(sc, method, fit);
  PosteriorOutcome out;
  double t0 = now_seconds();

  if (sc.dim <= 2) {
    out.gridded = true;
    out.grid = grid_posterior(post, std::vector<int>(sc.dim, opt.grid_res));
    out.cov_trace = out.grid.covariance_trace();
    bool ref_ok = true;
    for (double r : sc.reference) ref_ok = ref_ok && r != 0.0;
    if (ref_ok) out.rescaled_cov_trace = out.grid.rescaled_covariance_trace(sc.reference);
    Mat cov = out.grid.covariance();
    for (int j = 0; j < sc.dim; ++j) out.cov_diag.push_back(cov(j, j));
    if (!opt.reference.empty()) {
      PosteriorGrid ref = load_grid(opt.reference);
      out.hellinger_vs_a = hellinger(ref, out.grid);
    }
  } else {
    DreamOptions dopt;
    dopt.n_chains = opt.chains;
    dopt.n_iter = opt.iters;
    dopt.seed = opt.seed;
    dopt.n_threads = opt.n_threads;
    out.dream = dream_sample(post, dopt, opt.gr_threshold);
    out.gr_converged = out.dream.converged;
    out.psrf_max = 0;
    for (double v : out.dream.psrf) out.psrf_max = std::max(out.psrf_max, v);
    if (!out.gr_converged)
      std::fprintf(stderr,
                   "run_posterior: Gelman-Rubin %.4f above threshold %.4f; results emitted\n",
                   out.psrf_max, opt.gr_threshold);
    // sample moments
    const Mat& s = out.dream.samples;
    std::vector<double> mean(sc.dim, 0.0);
    for (int i = 0; i < s.rows(); ++i)
      for (int j = 0; j < sc.dim; ++j) mean[j] += s(i, j);
    for (int j = 0; j < sc.dim; ++j) mean[j] /= s.rows();
    out.cov_trace = 0;
    out.rescaled_cov_trace = 0;
    for (int j = 0; j < sc.dim; ++j) {
      double v = 0;
      for (int i = 0; i < s.rows(); ++i) v += (s(i, j) - mean[j]) * (s(i, j) - mean[j]);
      v /= (s.rows() - 1);
      out.cov_diag.push_back(v);
      out.cov_trace += v;
      out.rescaled_cov_trace += v / (sc.reference[j] * sc.reference[j]);
    }
    if (!std::isfinite(out.rescaled_cov_trace))
      out.rescaled_cov_trace = std::numeric_limits<double>::quiet_NaN();
    if (!opt.reference.empty()) {
      Mat ref = load_samples(opt.reference);
      out.kl_vs_reference = knn_kl_divergence(out.dream.samples, ref, 5);
    }
  }
  out.posterior_seconds = now_seconds() - t0;

  if (!dir.empty()) {
    fs::create_directories(dir);
    if (out.gridded)
      save_grid(out.grid, dir + "/grid.txt");
    else
      save_samples(out.dream, opt.chains, dir + "/samples.csv");
    write_posterior_manifest(dir, sc, method, opt, out);
  }
  return out;
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

void write_fit_manifest(const std::string& dir, const Scenario& sc, const FitOptions& opt,
                        const FitResult& fit) {
  json j;
  j["version"] = kToolkitVersion;
  j["kind"] = "fit";
  j["benchmark"] = sc.id;
  j["method"] = method_name(fit.method);
  json cfg;
  cfg["seed"] = opt.seed;
  cfg["hyper_id"] = opt.hyper_id.empty() ? sc.hyper_id : opt.hyper_id;
  cfg["epochs_override"] = opt.epochs_override;
  j["config"] = cfg;
  j["config_hash"] = config_hash(sc.id + method_name(fit.method) + cfg.dump());
  j["timings"]["fit_s"] = fit.fit_seconds;
  j["metrics"]["test_mse"] = fit.test_mse;
  if (fit.method == Method::F) {
    j["metrics"]["alpha"] = fit.alpha;
    j["metrics"]["flow_test_loglik"] = fit.flow_test_loglik;
  }
  std::ofstream out(dir + "/fit_manifest.json");
  if (!out) throw ConfigError("write_fit_manifest: cannot write in " + dir);
  out << j.dump(2) << "\n";
}

void write_posterior_manifest(const std::string& dir, const Scenario& sc, Method method,
                              const PosteriorOptions& opt, const PosteriorOutcome& out) {
  json j;
  j["version"] = kToolkitVersion;
  j["kind"] = "posterior";
  j["benchmark"] = sc.id;
  j["method"] = method_name(method);
  json cfg;
  cfg["grid_res"] = opt.grid_res;
  cfg["chains"] = opt.chains;
  cfg["iters"] = opt.iters;
  cfg["seed"] = opt.seed;
  cfg["gr_threshold"] = opt.gr_threshold;
  j["config"] = cfg;
  j["config_hash"] = config_hash(sc.id + method_name(method) + cfg.dump());
  j["timings"]["posterior_s"] = out.posterior_seconds;
  json m;
  if (std::isfinite(out.hellinger_vs_a)) m["hellinger"] = out.hellinger_vs_a;
  if (std::isfinite(out.kl_vs_reference)) m["kl"] = out.kl_vs_reference;
  if (std::isfinite(out.cov_trace)) m["cov_trace"] = out.cov_trace;
  if (std::isfinite(out.rescaled_cov_trace)) m["rescaled_cov_trace"] = out.rescaled_cov_trace;
  m["cov_diag"] = out.cov_diag;
  if (!out.gridded) {
    m["psrf_max"] = out.psrf_max;
    m["gr_converged"] = out.gr_converged;
  }
  j["metrics"] = m;
  // carry the fit timing when the artifacts live alongside
  std::ifstream fin(dir + "/fit_manifest.json");
  if (fin) {
    json fj = json::parse(fin);
    j["timings"]["fit_s"] = fj["timings"]["fit_s"];
  }
  std::ofstream outp(dir + "/posterior_manifest.json");
  if (!outp) throw ConfigError("write_posterior_manifest: cannot write in " + dir);
  outp << j.dump(2) << "\n";
}

std::string report_table(const std::vector<std::string>& manifest_paths) {
  if (manifest_paths.empty()) throw ConfigError("report_table: need at least one manifest");
  struct Agg {
    std::vector<double> hellinger, kl, trace, rescaled, fit_s, post_s;
    std::vector<std::vector<double>> diag;
  };
  std::map<std::string, Agg> by_method;
  std::string benchmark;
  for (const auto& path : manifest_paths) {
    std::ifstream in(path);
    if (!in) throw ConfigError("report_table: cannot open " + path);
    json j = json::parse(in);
    std::string b = j.at("benchmark");
    if (benchmark.empty()) benchmark = b;
    else if (benchmark != b)
      throw ConfigError("report_table: manifests mix benchmarks " + benchmark + " and " + b);
    Agg& a = by_method[j.at("method")];
    const json& m = j.at("metrics");
    if (m.contains("hellinger")) a.hellinger.push_back(m["hellinger"].get<double>());
    if (m.contains("kl")) a.kl.push_back(m["kl"].get<double>());
    if (m.contains("cov_trace")) a.trace.push_back(m["cov_trace"].get<double>());
    if (m.contains("rescaled_cov_trace"))
      a.rescaled.push_back(m["rescaled_cov_trace"].get<double>());
    if (m.contains("cov_diag")) a.diag.push_back(m["cov_diag"].get<std::vector<double>>());
    if (j["timings"].contains("fit_s")) a.fit_s.push_back(j["timings"]["fit_s"].get<double>());
    if (j["timings"].contains("posterior_s"))
      a.post_s.push_back(j["timings"]["posterior_s"].get<double>());
  }

  auto mean_std = [](const std::vector<double>& v) -> std::pair<std::string, std::string> {
    if (v.empty()) return {"", ""};
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    if (v.size() == 1) return {fmt17(m), ""};
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    s = std::sqrt(s / (v.size() - 1));
    return {fmt17(m), fmt17(s)};
  };

  std::ostringstream out;
  out << "benchmark,method,runs,hellinger_mean,hellinger_std,kl_mean,kl_std,"
         "cov_trace_mean,cov_trace_std,rescaled_trace_mean,rescaled_trace_std,"
         "cov_diag_mean,fit_s_mean,posterior_s_mean\n";
  for (const auto& [method, a] : by_method) {
    std::size_t runs = std::max({a.hellinger.size(), a.kl.size(), a.trace.size()});
    auto [hm, hs] = mean_std(a.hellinger);
    auto [km, ks] = mean_std(a.kl);
    auto [tm, ts] = mean_std(a.trace);
    auto [rm, rs] = mean_std(a.rescaled);
    auto [fm, fsd] = mean_std(a.fit_s);
    auto [pm, psd] = mean_std(a.post_s);
    std::string diag;
    if (!a.diag.empty()) {
      std::vector<double> dmean(a.diag[0].size(), 0.0);
      for (const auto& d : a.diag)
        for (std::size_t j = 0; j < dmean.size(); ++j) dmean[j] += d[j];
      for (std::size_t j = 0; j < dmean.size(); ++j) {
        dmean[j] /= a.diag.size();
        diag += (j ? ";" : "") + std::string(fmt17(dmean[j]));
      }
    }
    out << benchmark << "," << method << "," << runs << "," << hm << "," << hs << "," << km
        << "," << ks << "," << tm << "," << ts << "," << rm << "," << rs << "," << diag << ","
        << fm << "," << pm << "\n";
  }
  return out.str();
}

std::vector<RationaleCell> run_rationale_study(std::uint64_t seed, int n_samples, int grid_res,
                                               std::vector<double> sigmas, int epochs_override,
                                               const std::string& dir) {
  const double y_obs = 1.1297;
  const HyperTable& table = hyper_defaults("rationale");
  std::vector<RationaleCell> cells;
  if (!dir.empty()) fs::create_directories(dir);

  PriorSpec prior =
      PriorSpec::truncated_normal({-1, -1}, {1, 1}, {0, 0}, {1.0 / 3.0, 1.0 / 3.0});

  for (std::size_t im = 0; im < sigmas.size(); ++im) {
    double sigma_model = sigmas[im];
    BenchmarkPair pair = analytical_noisy_pair(sigma_model, seed + im);
    // shared input draws and model evaluations for this row
    Rng xrng(seed ^ (0x9e37 + im));
    Mat x = sample_uniform_box({-1, -1}, {1, 1}, n_samples, xrng);
    std::vector<double> base(n_samples);
    for (int i = 0; i < n_samples; ++i) {
      double h, l;
      pair.hf->eval(x.row_ptr(i), &h);
      pair.lf->eval(x.row_ptr(i), &l);
      base[i] = h - l;  // alpha = 1, qdagger = lf
    }
    for (std::size_t in = 0; in < sigmas.size(); ++in) {
      double sigma_noise = sigmas[in];
      RationaleCell cell;
      cell.sigma_model = sigma_model;
      cell.sigma_noise = sigma_noise;
      cell.target_variance = sigma_model * sigma_model + sigma_noise * sigma_noise;

      Mat deltas(n_samples, 1);
      Rng nrng(seed ^ (0xabcdULL + im * 16 + in));
      for (int i = 0; i < n_samples; ++i)
        deltas(i, 0) = base[i] + (sigma_noise > 0 ? nrng.normal(0.0, sigma_noise) : 0.0);

      TrainConfig fcfg = to_train_config(table.flow, seed + 100 * im + in);
      if (epochs_override > 0) fcfg.epochs = epochs_override;
      auto flow = std::make_shared<FlowModel>(train_flow(deltas, fcfg, table.flow.arch));

      // fitted variance by wide trapezoidal quadrature
      {
        double mu = flow->standardizer().mean[0];
        double sd = std::max(flow->standardizer().std[0], 1e-9);
        double lo = mu - 14 * sd, hi = mu + 14 * sd;
        int nq = 20001;
        double h = (hi - lo) / (nq - 1);
        double s0 = 0, s1 = 0, s2 = 0;
        for (int i = 0; i < nq; ++i) {
          double xx = lo + i * h;
          double w = (i == 0 || i == nq - 1) ? 0.5 : 1.0;
          double p = std::exp(flow->log_density({xx}));
          s0 += w * p;
          s1 += w * p * xx;
          s2 += w * p * xx * xx;
        }
        s0 *= h;
        s1 *= h;
        s2 *= h;
        cell.flow_variance = s2 / s0 - (s1 / s0) * (s1 / s0);
      }

      Posterior fpost;
      fpost.prior = prior;
      fpost.likelihood.method = Method::F;
      fpost.likelihood.lf = pair.lf;
      fpost.likelihood.surrogate = std::make_shared<FunctionModel>(
          2, 1, [](const double*, double* o) { o[0] = 0.0; });  // qdagger = lf itself
      fpost.likelihood.flow = flow;
      fpost.likelihood.alpha = {1.0};
      fpost.likelihood.noise.observations.resize(1, 1);
      fpost.likelihood.noise.observations(0, 0) = y_obs;
      fpost.likelihood.noise.variance = {sigma_noise * sigma_noise};
      cell.grid = grid_posterior(fpost, {grid_res, grid_res});

      if (sigma_noise > 0) {
        Posterior apost;
        apost.prior = prior;
        apost.likelihood.method = Method::A;
        apost.likelihood.hf = pair.hf;  // exact model
        apost.likelihood.noise = single_observation(y_obs, sigma_noise);
        if (sigma_model == 0.0) {
          auto agrid = grid_posterior(apost, {grid_res, grid_res});
          cell.hellinger_vs_a = hellinger(agrid, cell.grid);
        }
      }

      if (!dir.empty())
        save_grid(cell.grid, dir + "/grid_sm" + std::to_string(im) + "_sn" +
                                 std::to_string(in) + ".txt");
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace mfb
