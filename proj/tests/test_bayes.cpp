#include <cmath>

#include "doctest.h"
#include "mfb/benchmarks.hpp"
#include "mfb/errors.hpp"
#include "mfb/grid.hpp"
#include "mfb/likelihood.hpp"
#include "mfb/sampling.hpp"

using namespace mfb;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NoiseSpec scalar_noise(double y, double sigma) {
  NoiseSpec n;
  n.observations.resize(1, 1);
  n.observations(0, 0) = y;
  n.variance = {sigma * sigma};
  return n;
}

std::shared_ptr<const Model> scaled_model(std::shared_ptr<const Model> inner, double c) {
  int in = inner->input_dim(), out = inner->output_dim();
  return std::make_shared<FunctionModel>(in, out, [inner, c, out](const double* x, double* o) {
    inner->eval(x, o);
    for (int j = 0; j < out; ++j) o[j] *= c;
  });
}

}  // namespace

TEST_CASE("uniform prior log-density") {
  auto p = PriorSpec::uniform({-1, -1}, {1, 1});
  double in[2] = {0, 0}, out[2] = {2, 0};
  CHECK(p.log_density(in) == 0.0);
  CHECK(p.log_density(out) == -kInf);
  double bad[2] = {std::nan(""), 0};
  CHECK_THROWS_AS(p.log_density(bad), DomainError);
}

TEST_CASE("log-uniform prior closed form") {
  auto p = PriorSpec::log_uniform({500}, {1500});
  double x = 1000;
  CHECK(p.log_density(&x) == doctest::Approx(-std::log(1000.0)).epsilon(1e-14));
  double lo = 400;
  CHECK(p.log_density(&lo) == -kInf);
  CHECK_THROWS_AS(PriorSpec::log_uniform({-1}, {2}), ConfigError);
}

TEST_CASE("log10-space truncated normal peaks at the midpoint") {
  auto bh = benchmark_pair("borehole");
  auto mid = bh.midpoint();
  std::vector<double> sig(8, 0.1);
  auto p = PriorSpec::truncated_normal(bh.lo, bh.hi, mid, sig, true);
  double at_mid = p.log_density(mid.data());
  Rng rng(3);
  Mat probe = latin_hypercube_maximin(bh.lo, bh.hi, 10000, rng, 1);
  for (int i = 0; i < probe.rows(); ++i) CHECK(p.log_density(probe.row_ptr(i)) <= at_mid);
}

TEST_CASE("prior sampling stays in the box and matches the law") {
  auto p = PriorSpec::log_uniform({500}, {1500});
  Rng rng(7);
  double mean_log = 0;
  for (int i = 0; i < 4000; ++i) {
    auto x = p.sample(rng);
    CHECK(x[0] >= 500);
    CHECK(x[0] <= 1500);
    mean_log += std::log(x[0]);
  }
  mean_log /= 4000;
  CHECK(mean_log ==
        doctest::Approx(0.5 * (std::log(500.0) + std::log(1500.0))).epsilon(0.003));

  auto tn = PriorSpec::truncated_normal({-1, -1}, {1, 1}, {0, 0}, {1.0 / 3, 1.0 / 3});
  for (int i = 0; i < 200; ++i) {
    auto x = tn.sample(rng);
    CHECK(tn.inside(x.data()));
  }
}

TEST_CASE("method A with a zero residual reduces to the normalization constant") {
  auto pair = benchmark_pair("analytical");
  std::vector<double> x{0.3, -0.2};
  double qh = pair.hf->operator()(x)[0];
  Likelihood lik;
  lik.method = Method::A;
  lik.hf = pair.hf;
  lik.noise = scalar_noise(qh, 0.1);
  lik.validate();
  CHECK(lik.log_likelihood(x) ==
        doctest::Approx(-0.5 * std::log(2 * 3.141592653589793 * 0.01)).epsilon(1e-12));
}

TEST_CASE("oracle surrogates make methods B-E agree with A pointwise") {
  auto pair = benchmark_pair("analytical");
  NoiseSpec noise = scalar_noise(1.3547, 0.1);

  Likelihood A;
  A.method = Method::A;
  A.hf = pair.hf;
  A.noise = noise;

  Likelihood B;
  B.method = Method::B;
  B.surrogate = pair.hf;  // oracle response surrogate
  B.noise = noise;

  auto delta_oracle = std::make_shared<FunctionModel>(2, 1, [&](const double* x, double* o) {
    double h, l;
    pair.hf->eval(x, &h);
    pair.lf->eval(x, &l);
    o[0] = h - l;
  });
  Likelihood C;
  C.method = Method::C;
  C.lf = pair.lf;
  C.surrogate = delta_oracle;
  C.noise = noise;

  Likelihood D = B;
  D.method = Method::D;
  Likelihood E = C;
  E.method = Method::E;

  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    double a = A.log_likelihood(x);
    CHECK(std::fabs(B.log_likelihood(x) - a) <= 1e-12 * std::max(1.0, std::fabs(a)));
    CHECK(std::fabs(C.log_likelihood(x) - a) <= 1e-12 * std::max(1.0, std::fabs(a)));
    CHECK(std::fabs(D.log_likelihood(x) - a) <= 1e-12 * std::max(1.0, std::fabs(a)));
    CHECK(std::fabs(E.log_likelihood(x) - a) <= 1e-12 * std::max(1.0, std::fabs(a)));
  }
}

TEST_CASE("log-likelihood decreases monotonically with the residual") {
  auto pair = benchmark_pair("analytical");
  std::vector<double> x{0.1, 0.4};
  double qh = pair.hf->operator()(x)[0];
  double prev = kInf;
  for (double off : {0.0, 0.05, 0.2, 0.7, 2.0}) {
    Likelihood lik;
    lik.method = Method::A;
    lik.hf = pair.hf;
    lik.noise = scalar_noise(qh + off, 0.1);
    double v = lik.log_likelihood(x);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("method F depends only on the product alpha * qdagger") {
  auto pair = benchmark_pair("analytical");
  Standardizer st;
  st.mean = {0.1};
  st.std = {0.9};
  auto flow = std::make_shared<FlowModel>(FlowModel::identity(1, {2, 4, 1}, st));

  auto delta_oracle = std::make_shared<FunctionModel>(2, 1, [&](const double* x, double* o) {
    double h, l;
    pair.hf->eval(x, &h);
    pair.lf->eval(x, &l);
    o[0] = h - l;
  });

  const double c = 3.7;
  Likelihood f1;
  f1.method = Method::F;
  f1.lf = pair.lf;
  f1.surrogate = delta_oracle;
  f1.flow = flow;
  f1.alpha = {0.8};
  f1.noise = scalar_noise(1.3547, 0.1);
  f1.validate();

  Likelihood f2 = f1;
  f2.lf = scaled_model(pair.lf, c);
  f2.surrogate = scaled_model(delta_oracle, c);
  f2.alpha = {0.8 / c};

  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    double a = f1.log_likelihood(x), b = f2.log_likelihood(x);
    CHECK(std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)));
  }
}

TEST_CASE("posterior short-circuits outside the box without model calls") {
  auto pair = benchmark_pair("analytical");
  auto counted = std::make_shared<CountingModel>(pair.hf);
  Posterior post;
  post.prior = PriorSpec::uniform({-1, -1}, {1, 1});
  post.likelihood.method = Method::A;
  post.likelihood.hf = counted;
  post.likelihood.noise = scalar_noise(1.0, 0.1);
  std::vector<double> outside{1.5, 0.0};
  CHECK(post.log_posterior(outside) == -kInf);
  CHECK(counted->count() == 0);
  std::vector<double> inside{0.5, 0.0};
  CHECK(std::isfinite(post.log_posterior(inside)));
  CHECK(counted->count() == 1);
}

TEST_CASE("uniform prior: posterior argmax equals likelihood argmax") {
  auto pair = benchmark_pair("analytical");
  Posterior post;
  post.prior = PriorSpec::uniform({-1, -1}, {1, 1});
  post.likelihood.method = Method::A;
  post.likelihood.hf = pair.hf;
  post.likelihood.noise = scalar_noise(1.3547, 0.1);
  auto g = grid_posterior(post, {50, 50});
  std::size_t best_lik = 0;
  double best_val = -kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.node_coords(i);
    double v = post.likelihood.log_likelihood(x);
    if (v > best_val) {
      best_val = v;
      best_lik = i;
    }
  }
  CHECK(g.argmax_density() == best_lik);
}

TEST_CASE("analytical posterior peak sits on the observed level set") {
  auto pair = benchmark_pair("analytical");
  Posterior post;
  post.prior = PriorSpec::uniform({-1, -1}, {1, 1});
  post.likelihood.method = Method::A;
  post.likelihood.hf = pair.hf;
  post.likelihood.noise = scalar_noise(1.3547, 0.1);
  auto g = grid_posterior(post, {100, 100});
  auto x = g.node_coords(g.argmax_density());
  double q = pair.hf->operator()(x)[0];
  CHECK(std::fabs(q - 1.3547) < 0.02);  // within grid resolution of the level set
}

TEST_CASE("likelihood configuration errors") {
  auto pair = benchmark_pair("analytical");
  Likelihood lik;
  lik.method = Method::C;
  lik.surrogate = pair.hf;
  lik.noise = scalar_noise(1.0, 0.1);
  CHECK_THROWS_AS(lik.validate(), ConfigError);  // missing low-fidelity handle

  NoiseSpec bad;
  bad.observations.resize(1, 1);
  bad.variance = {0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_NOTHROW(bad.validate(false));  // method F records zero noise verbatim
}

TEST_CASE("noise sample synthesis") {
  Mat hf(100, 1), q(100, 1);
  Rng gen(3);
  for (int i = 0; i < 100; ++i) {
    hf(i, 0) = gen.normal();
    q(i, 0) = 0.9 * hf(i, 0);
  }
  Rng r1(5), r2(5);
  auto s1 = make_noise_samples(hf, q, {1.0}, {0.04}, r1, "test");
  auto s2 = make_noise_samples(hf, q, {1.0}, {0.04}, r2, "test");
  REQUIRE(s1.deltas.rows() == 100);
  CHECK(s1.alpha_used[0] == 1.0);
  for (std::size_t i = 0; i < s1.deltas.size(); ++i) CHECK(s1.deltas[i] == s2.deltas[i]);
  // residual = 0.1 hf + noise: spread wider than the pure noise
  double v = 0;
  for (int i = 0; i < 100; ++i) v += s1.deltas(i, 0) * s1.deltas(i, 0);
  CHECK(v / 100 > 0.04 * 0.5);
}
