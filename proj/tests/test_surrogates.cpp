#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "mfb/benchmarks.hpp"
#include "mfb/checkpoint.hpp"
#include "mfb/errors.hpp"
#include "mfb/sampling.hpp"
#include "mfb/surrogates.hpp"

using namespace mfb;

namespace {

Dataset make_dataset(int n, int d, std::uint64_t seed,
                     const std::function<double(const double*)>& hf,
                     const std::function<double(const double*)>& lf = nullptr) {
  Rng rng(seed);
  Dataset ds;
  std::vector<double> lo(d, -1.0), hi(d, 1.0);
  ds.inputs = sample_uniform_box(lo, hi, n, rng);
  ds.hf.resize(n, 1);
  if (lf) ds.lf.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    ds.hf(i, 0) = hf(ds.inputs.row_ptr(i));
    if (lf) ds.lf(i, 0) = lf(ds.inputs.row_ptr(i));
  }
  ds.make_split(rng);
  return ds;
}

TrainConfig quick_cfg(int epochs, double lr = 1e-3, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.scheduler_step = 0.9995;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("discrepancy vanishes when hf == lf") {
  auto f = [](const double* x) { return std::sin(x[0]) + x[1]; };
  Dataset ds = make_dataset(60, 2, 3, f, f);
  DenseSurrogate s = train_dense(ds, Target::discrepancy, quick_cfg(200), {2, 8});
  CHECK(s.test_mse < 1e-6);
}

TEST_CASE("discrepancy target requires low-fidelity outputs") {
  Dataset ds = make_dataset(30, 2, 3, [](const double* x) { return x[0]; });
  CHECK_THROWS_AS(train_dense(ds, Target::discrepancy, quick_cfg(10), {1, 4}), ConfigError);
}

TEST_CASE("learned discrepancy of a linear pair matches the closed form") {
  // hf = 2 x1 + x2, lf = x1 + x2 -> discrepancy is exactly x1
  Dataset ds = make_dataset(
      90, 2, 11, [](const double* x) { return 2 * x[0] + x[1]; },
      [](const double* x) { return x[0] + x[1]; });
  DenseSurrogate s = train_dense(ds, Target::discrepancy, quick_cfg(3000, 3e-3), {2, 16});
  double worst = 0.0;
  for (double a = -0.95; a <= 0.95; a += 0.19)
    for (double b = -0.95; b <= 0.95; b += 0.19)
      worst = std::max(worst, std::fabs(s.predict1({a, b})[0] - a));
  CHECK(worst < 0.05);
}

TEST_CASE("zero-network surrogate predicts the training-label mean") {
  DenseSurrogate s;
  s.net = MlpNet::zeros({2, 4, 1});
  s.target = Target::direct;
  s.in_std.mean = {0.0, 0.0};
  s.in_std.std = {1.0, 1.0};
  s.out_std.mean = {3.25};
  s.out_std.std = {2.0};
  CHECK(s.predict1({0.4, -0.7})[0] == doctest::Approx(3.25).epsilon(1e-15));
}

TEST_CASE("trained surrogate stays within 3 training-RMSE at training points") {
  auto pair = benchmark_pair("analytical");
  Dataset ds = make_dataset(70, 2, 5, [&](const double* x) {
    double out;
    pair.hf->eval(x, &out);
    return out;
  });
  DenseSurrogate s = train_dense(ds, Target::direct, quick_cfg(2500, 2e-3), {3, 16});
  double rmse = std::sqrt(s.train_mse);
  int within = 0;
  for (int idx : ds.train_idx) {
    double pred = s.predict1({ds.inputs(idx, 0), ds.inputs(idx, 1)})[0];
    if (std::fabs(pred - ds.hf(idx, 0)) <= 3.0 * rmse + 1e-12) ++within;
  }
  // 3-RMSE is a scale-consistency bound; residual tails keep a few points out
  CHECK(within >= (int)(0.9 * ds.train_idx.size()));
}

TEST_CASE("multi-output surrogate keeps output shape") {
  Rng rng(8);
  Dataset ds;
  ds.inputs = sample_uniform_box({-1, -1}, {1, 1}, 40, rng);
  ds.hf.resize(40, 3);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 3; ++j) ds.hf(i, j) = ds.inputs(i, 0) * (j + 1) + ds.inputs(i, 1);
  ds.make_split(rng);
  DenseSurrogate s = train_dense(ds, Target::direct, quick_cfg(100), {1, 6});
  CHECK(s.predict1({0.1, 0.2}).size() == 3);
}

TEST_CASE("training is bitwise deterministic per seed") {
  auto f = [](const double* x) { return std::exp(0.5 * x[0]) + x[1] * x[1]; };
  Dataset ds = make_dataset(50, 2, 21, f);
  DenseSurrogate a = train_dense(ds, Target::direct, quick_cfg(300, 1e-3, 9), {2, 10});
  DenseSurrogate b = train_dense(ds, Target::direct, quick_cfg(300, 1e-3, 9), {2, 10});
  for (std::size_t l = 0; l < a.net.weights.size(); ++l)
    for (std::size_t i = 0; i < a.net.weights[l].size(); ++i)
      CHECK(a.net.weights[l][i] == b.net.weights[l][i]);
  DenseSurrogate c = train_dense(ds, Target::direct, quick_cfg(300, 1e-3, 10), {2, 10});
  bool differs = false;
  for (std::size_t i = 0; i < a.net.weights[0].size(); ++i)
    differs = differs || a.net.weights[0][i] != c.net.weights[0][i];
  CHECK(differs);
}

TEST_CASE("neuram recovers an exact one-dimensional ridge") {
  // hf depends on x1 only: the manifold is analytic and idempotency can be
  // driven to zero
  Dataset ds = make_dataset(120, 2, 13, [](const double* x) { return x[0]; });
  NeurAmArch arch{{1, 8}, {2, 12}};
  NeurAmModel m = train_neuram(ds, Target::direct, quick_cfg(4000, 2e-3), arch);
  CHECK(m.train_terms[2] < 1e-4);
  CHECK(m.test_mse < 1e-3);
}

TEST_CASE("neuram on a constant model collapses to the constant") {
  Dataset ds = make_dataset(40, 2, 17, [](const double*) { return 4.2; });
  NeurAmArch arch{{1, 4}, {1, 6}};
  NeurAmModel m = train_neuram(ds, Target::direct, quick_cfg(2000, 3e-3), arch);
  CHECK(m.predict1({0.3, 0.3})[0] == doctest::Approx(4.2).epsilon(1e-6));
  CHECK(m.train_terms[0] < 1e-4);
  CHECK(m.train_terms[1] < 1e-4);
  CHECK(m.train_terms[2] < 1e-3);
}

TEST_CASE("neuram final loss re-evaluates exactly") {
  Dataset ds = make_dataset(60, 2, 19, [](const double* x) { return x[0] * x[0] + x[1]; });
  NeurAmArch arch{{1, 5}, {2, 8}};
  NeurAmModel m = train_neuram(ds, Target::direct, quick_cfg(400), arch);
  Mat x_tr = ds.gather_inputs(ds.train_idx);
  Mat y_tr = ds.gather(ds.hf, ds.train_idx);
  auto terms = m.eval_terms(x_tr, y_tr);
  double loss = terms[0] + terms[1] + terms[2];
  CHECK(std::fabs(loss - m.final_train_loss) <= 1e-10 * std::max(1.0, std::fabs(loss)));
}

TEST_CASE("neuram idempotency bound on manifold points") {
  Dataset ds = make_dataset(100, 2, 23, [](const double* x) { return std::sin(x[0] + x[1]); });
  NeurAmArch arch{{1, 6}, {2, 10}};
  NeurAmModel m = train_neuram(ds, Target::direct, quick_cfg(2500, 2e-3), arch);
  // norm-scale bound from the recorded third-term residuals (RMS over the
  // training/test splits)
  double bound = std::sqrt(2.0 * m.train_terms[2]) + 10.0 * std::sqrt(2.0 * m.test_terms[2]);
  Mat probe = ds.gather_inputs(ds.train_idx);
  Mat on_manifold = m.decode_to_raw(m.encode(probe));
  Mat again = m.decode_to_raw(m.encode(on_manifold));
  for (int i = 0; i < probe.rows(); ++i) {
    double s = 0;
    for (int j = 0; j < 2; ++j) {
      // compare in standardized coordinates, matching the loss terms
      double a = (again(i, j) - m.in_std.mean[j]) / m.in_std.std[j];
      double b = (on_manifold(i, j) - m.in_std.mean[j]) / m.in_std.std[j];
      s += (a - b) * (a - b);
    }
    CHECK(std::sqrt(s) <= bound + 1e-8);
  }
}

TEST_CASE("alpha_opt identities") {
  Rng rng(31);
  std::vector<double> hf(400), q1(400), q2(400);
  for (int i = 0; i < 400; ++i) {
    hf[i] = std::sin(0.1 * i) + 0.3 * rng.normal();
    q1[i] = hf[i];
    q2[i] = 2.0 * hf[i] + 5.0;
  }
  CHECK(fit_alpha_opt(hf, q1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit_alpha_opt(hf, q2) == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> qc(400, 3.0);
  CHECK_THROWS_AS(fit_alpha_opt(hf, qc), NumericError);
  std::vector<double> short1{1.0};
  CHECK_THROWS_AS(fit_alpha_opt(short1, short1), ConfigError);
}

TEST_CASE("alpha_opt matches an independent one-pass estimate on Gaussians") {
  Rng rng(41);
  int n = 1000;
  std::vector<double> hf(n), q(n);
  // hf = z, q = 0.8 z + 0.6 w: Cov = 0.8, Var(q) = 0.64 + 0.36 = 1 -> alpha = 0.8
  for (int i = 0; i < n; ++i) {
    double z = rng.normal(), w = rng.normal();
    hf[i] = z;
    q[i] = 0.8 * z + 0.6 * w;
  }
  double a = fit_alpha_opt(hf, q);
  CHECK(a == doctest::Approx(0.8).epsilon(0.05));
  // one-pass oracle
  double sh = 0, sq = 0, shq = 0, sqq = 0;
  for (int i = 0; i < n; ++i) {
    sh += hf[i];
    sq += q[i];
    shq += hf[i] * q[i];
    sqq += q[i] * q[i];
  }
  double oracle = (shq - sh * sq / n) / (sqq - sq * sq / n);
  CHECK(a == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("alpha_opt minimizes the residual variance (convexity probe)") {
  Rng rng(43);
  int n = 600;
  std::vector<double> hf(n), q(n);
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    hf[i] = z + 0.2 * rng.normal();
    q[i] = 1.7 * z + 0.5 * rng.normal();
  }
  double a = fit_alpha_opt(hf, q);
  double v0 = scaled_residual_variance(hf, q, a);
  for (double da : {0.1, -0.1, 0.01, -0.01})
    CHECK(v0 <= scaled_residual_variance(hf, q, a + da));
}

TEST_CASE("variance inflation identity V(alpha_opt) = V[hf](1 - k^2)") {
  Rng rng(47);
  int n = 512;
  std::vector<double> hf(n), q(n);
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    hf[i] = 2.0 * z + 0.3 * rng.normal() + 1.0;
    q[i] = -0.9 * z + 0.4 * rng.normal();
  }
  double a = fit_alpha_opt(hf, q);
  double v = scaled_residual_variance(hf, q, a);
  // Pearson and variance from the same samples
  double mh = 0, mq = 0;
  for (int i = 0; i < n; ++i) {
    mh += hf[i];
    mq += q[i];
  }
  mh /= n;
  mq /= n;
  double cov = 0, vh = 0, vq = 0;
  for (int i = 0; i < n; ++i) {
    cov += (hf[i] - mh) * (q[i] - mq);
    vh += (hf[i] - mh) * (hf[i] - mh);
    vq += (q[i] - mq) * (q[i] - mq);
  }
  cov /= n - 1;
  vh /= n - 1;
  vq /= n - 1;
  double kappa = cov / std::sqrt(vh * vq);
  double expect = vh * (1.0 - kappa * kappa);
  CHECK(std::fabs(v - expect) <= 1e-8 * std::fabs(expect));
}

TEST_CASE("dense and neuram checkpoints round trip bit-exactly") {
  Dataset ds = make_dataset(50, 2, 51, [](const double* x) { return x[0] - 0.5 * x[1]; });
  TrainConfig cfg = quick_cfg(150, 1e-3, 77);
  DenseSurrogate s = train_dense(ds, Target::direct, cfg, {2, 7});
  save_dense(s, cfg, "/tmp/mfb_dense.ckpt");
  CHECK(checkpoint_kind("/tmp/mfb_dense.ckpt") == "dense");
  TrainConfig cfg_back;
  DenseSurrogate s2 = load_dense("/tmp/mfb_dense.ckpt", &cfg_back);
  CHECK(cfg_back.seed == 77);
  CHECK(cfg_back.epochs == 150);
  for (double a : {-0.7, 0.0, 0.9})
    CHECK(s.predict1({a, -a})[0] == s2.predict1({a, -a})[0]);

  NeurAmArch arch{{1, 4}, {1, 5}};
  NeurAmModel m = train_neuram(ds, Target::direct, cfg, arch);
  save_neuram(m, cfg, "/tmp/mfb_neuram.ckpt");
  CHECK(checkpoint_kind("/tmp/mfb_neuram.ckpt") == "neuram");
  NeurAmModel m2 = load_neuram("/tmp/mfb_neuram.ckpt");
  for (double a : {-0.7, 0.0, 0.9})
    CHECK(m.predict1({a, -a})[0] == m2.predict1({a, -a})[0]);
  CHECK(m2.train_terms[2] == m.train_terms[2]);
  std::remove("/tmp/mfb_dense.ckpt");
  std::remove("/tmp/mfb_neuram.ckpt");
}

TEST_CASE("random search respects the admissible ranges") {
  Dataset ds = make_dataset(40, 2, 61, [](const double* x) { return x[0]; });
  TuneResult r = random_search_dense(ds, Target::direct, 3, 99, 60);
  CHECK(r.arch.hidden_layers >= 1);
  CHECK(r.arch.hidden_layers <= 10);
  CHECK(r.arch.neurons >= 1);
  CHECK(r.arch.neurons <= 20);
  CHECK(r.learning_rate >= 1e-5);
  CHECK(r.learning_rate <= 1e-3);
  CHECK(r.scheduler_step >= 0.999);
  CHECK(r.scheduler_step <= 0.9999);
  CHECK(std::isfinite(r.test_mse));
}
