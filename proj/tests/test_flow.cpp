#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "mfb/checkpoint.hpp"
#include "mfb/errors.hpp"
#include "mfb/flow.hpp"
#include "mfb/sampling.hpp"

using namespace mfb;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double std_normal_logpdf(double z) { return -0.5 * z * z - 0.5 * kLog2Pi; }

Mat gaussian_samples_1d(int n, double mean, double std, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(n, 1);
  for (int i = 0; i < n; ++i) m[i] = rng.normal(mean, std);
  return m;
}

double sample_variance(const Mat& x, int col = 0) {
  double m = 0;
  for (int i = 0; i < x.rows(); ++i) m += x(i, col);
  m /= x.rows();
  double v = 0;
  for (int i = 0; i < x.rows(); ++i) v += (x(i, col) - m) * (x(i, col) - m);
  return v / (x.rows() - 1);
}

}  // namespace

TEST_CASE("identity flow reproduces the standardized normal density") {
  Standardizer st;
  st.mean = {2.0};
  st.std = {3.0};
  FlowModel f = FlowModel::identity(1, {4, 6, 2}, st);
  for (double x : {-4.0, 0.0, 2.0, 7.5}) {
    double u = (x - 2.0) / 3.0;
    CHECK(f.log_density({x}) ==
          doctest::Approx(std_normal_logpdf(u) - std::log(3.0)).epsilon(1e-12));
  }
  Standardizer st2;
  st2.mean = {0.5, -1.0};
  st2.std = {1.0, 2.0};
  FlowModel g = FlowModel::identity(2, {2, 4, 2}, st2);
  double expect = std_normal_logpdf((0.7 - 0.5) / 1.0) + std_normal_logpdf((1.0 + 1.0) / 2.0) -
                  std::log(2.0);
  CHECK(g.log_density({0.7, 1.0}) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("scalar flow learns a gaussian and satisfies the invertibility suite") {
  Rng gen(7);
  Mat data(3000, 1);
  for (int i = 0; i < 3000; ++i) {
    double z = gen.normal();
    data[i] = 0.4 + 0.2 * z + 0.05 * z * z;  // mildly skewed
  }
  TrainConfig cfg;
  cfg.epochs = 600;
  cfg.learning_rate = 2e-3;
  cfg.scheduler_step = 0.999;
  cfg.seed = 3;
  FlowModel f = train_flow(data, cfg, {4, 8, 2});

  // bijectivity round trips at 1e-10 for 1000 random points
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    double z = rng.normal() * 2.0;
    auto x = f.from_base({z});
    auto z2 = f.to_base(x);
    CHECK(std::fabs(z2[0] - z) < 1e-10);
    double x0 = rng.uniform(-0.5, 1.5);
    auto zf = f.to_base({x0});
    auto xb = f.from_base(zf);
    CHECK(std::fabs(xb[0] - x0) < 1e-10);
  }

  // jacobian consistency: forward log|det| equals minus the inverse one
  for (int i = 0; i < 100; ++i) {
    double z = rng.normal();
    double ld_g = 0, ld_n = 0;
    auto x = f.from_base({z}, &ld_g);
    f.to_base(x, &ld_n);
    CHECK(std::fabs(ld_g + ld_n) < 1e-10);
    // density round trip through the generative direction
    CHECK(std::fabs(f.log_density(x) - (std_normal_logpdf(z) - ld_g)) < 1e-10);
  }

  // fitted variance close to the data variance
  Rng srng(23);
  Mat draws = f.sample(20000, srng);
  CHECK(sample_variance(draws) == doctest::Approx(sample_variance(data)).epsilon(0.10));

  // training log-likelihood is non-decreasing up to adam noise
  for (std::size_t i = 1; i < f.loglik_history.size(); ++i)
    CHECK(f.loglik_history[i] >= f.loglik_history[i - 1] - 0.01);
}

TEST_CASE("scalar flow normalizes to one on a wide box") {
  Mat data = gaussian_samples_1d(4000, 1.0, 0.5, 17);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.learning_rate = 2e-3;
  cfg.seed = 5;
  FlowModel f = train_flow(data, cfg, {4, 6, 2});
  double lo = 1.0 - 12 * 0.5, hi = 1.0 + 12 * 0.5;
  Mat pts = halton_sequence(100000, 1);
  double acc = 0.0;
  for (int i = 0; i < pts.rows(); ++i) {
    double x = lo + (hi - lo) * pts(i, 0);
    acc += std::exp(f.log_density({x}));
  }
  double integral = acc * (hi - lo) / pts.rows();
  CHECK(integral == doctest::Approx(1.0).epsilon(0.015));
}

TEST_CASE("degenerate residual set concentrates at the constant") {
  Mat data(64, 1);
  data.fill(2.5);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 1;
  FlowModel f = train_flow(data, cfg, {2, 4, 1});
  Rng rng(2);
  Mat draws = f.sample(200, rng);
  for (int i = 0; i < draws.rows(); ++i) CHECK(std::fabs(draws[i] - 2.5) < 1e-9);
  CHECK(std::sqrt(sample_variance(draws)) < 1e-10);  // below the standardization floor scale
  CHECK(f.log_density({2.5}) > f.log_density({2.6}) + 100.0);
}

TEST_CASE("realnvp fits a correlated gaussian (analytic KL oracle)") {
  // target: zero-mean gaussian with cov [[1, 0.6], [0.6, 1.5]]
  Rng gen(29);
  int n = 1600;
  Mat data(n, 2);
  const double l11 = 1.0, l21 = 0.6, l22 = 1.06770782520313112;  // cholesky factor
  for (int i = 0; i < n; ++i) {
    double z1 = gen.normal(), z2 = gen.normal();
    data(i, 0) = l11 * z1;
    data(i, 1) = l21 * z1 + l22 * z2;
  }
  TrainConfig cfg;
  cfg.epochs = 900;
  cfg.learning_rate = 2e-3;
  cfg.scheduler_step = 0.999;
  cfg.seed = 7;
  FlowModel f = train_flow(data, cfg, {2, 8, 2});

  // KL(true || fitted) by monte carlo against the closed-form density
  const double det = 1.0 * 1.5 - 0.36;
  const double i11 = 1.5 / det, i12 = -0.6 / det, i22 = 1.0 / det;
  Rng mc(31);
  double kl = 0.0;
  int nmc = 3000;
  for (int i = 0; i < nmc; ++i) {
    double z1 = mc.normal(), z2 = mc.normal();
    double x1 = l11 * z1, x2 = l21 * z1 + l22 * z2;
    double q = x1 * x1 * i11 + 2 * x1 * x2 * i12 + x2 * x2 * i22;
    double log_true = -0.5 * q - 0.5 * std::log(det) - kLog2Pi;
    kl += log_true - f.log_density({x1, x2});
  }
  kl /= nmc;
  CHECK(kl < 0.05);

  // invertibility for the coupling stack
  Rng rng(37);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> z{rng.normal(), rng.normal()};
    double ld_g = 0, ld_n = 0;
    auto x = f.from_base(z, &ld_g);
    auto z2 = f.to_base(x, &ld_n);
    CHECK(std::fabs(z2[0] - z[0]) < 1e-10);
    CHECK(std::fabs(z2[1] - z[1]) < 1e-10);
    CHECK(std::fabs(ld_g + ld_n) < 1e-10);
  }
}

TEST_CASE("flow sampling is reproducible and moment-faithful") {
  Mat data = gaussian_samples_1d(4000, 3.0, 2.0, 41);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 2e-3;
  cfg.seed = 11;
  FlowModel f = train_flow(data, cfg, {4, 4, 2});
  Rng r1(5), r2(5);
  Mat a = f.sample(500, r1);
  Mat b = f.sample(500, r2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  Rng r3(6);
  Mat big = f.sample(100000, r3);
  double mean = 0;
  for (int i = 0; i < big.rows(); ++i) mean += big[i];
  mean /= big.rows();
  CHECK(mean > 2.8);
  CHECK(mean < 3.2);
}

TEST_CASE("identity flow sampling has standard moments") {
  Standardizer st;
  st.mean = {0.0};
  st.std = {1.0};
  FlowModel f = FlowModel::identity(1, {2, 4, 1}, st);
  Rng rng(3);
  Mat s = f.sample(100000, rng);
  double mean = 0;
  for (int i = 0; i < s.rows(); ++i) mean += s[i];
  mean /= s.rows();
  CHECK(std::fabs(mean) < 0.02);
  CHECK(sample_variance(s) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("flow checkpoints round trip bit-exactly") {
  Mat data = gaussian_samples_1d(500, -1.0, 0.7, 53);
  TrainConfig cfg;
  cfg.epochs = 120;
  cfg.seed = 13;
  FlowModel f = train_flow(data, cfg, {3, 5, 2});
  save_flow(f, cfg, "/tmp/mfb_flow.ckpt");
  CHECK(checkpoint_kind("/tmp/mfb_flow.ckpt") == "flow");
  FlowModel g = load_flow("/tmp/mfb_flow.ckpt");
  for (double x : {-2.0, -1.0, 0.0, 0.5}) CHECK(f.log_density({x}) == g.log_density({x}));

  Rng gen(3);
  Mat d2(300, 2);
  for (std::size_t i = 0; i < d2.size(); ++i) d2[i] = gen.normal();
  FlowModel f2 = train_flow(d2, cfg, {1, 3, 1});
  save_flow(f2, cfg, "/tmp/mfb_flow2.ckpt");
  FlowModel g2 = load_flow("/tmp/mfb_flow2.ckpt");
  CHECK(f2.log_density({0.3, -0.8}) == g2.log_density({0.3, -0.8}));
  std::remove("/tmp/mfb_flow.ckpt");
  std::remove("/tmp/mfb_flow2.ckpt");
}

TEST_CASE("train_flow validates its input") {
  Mat tiny(2, 1);
  TrainConfig cfg;
  CHECK_THROWS_AS(train_flow(tiny, cfg, {2, 4, 1}), ConfigError);
}
