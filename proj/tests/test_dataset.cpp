#include <cstdio>
#include <set>

#include "doctest.h"
#include "mfb/dataset.hpp"
#include "mfb/errors.hpp"
#include "mfb/sampling.hpp"

using namespace mfb;

TEST_CASE("uniform sampling stays in the box and is seed-deterministic") {
  Rng r1(5), r2(5), r3(6);
  auto a = sample_uniform_box({-1, 0}, {1, 2}, 50, r1);
  auto b = sample_uniform_box({-1, 0}, {1, 2}, 50, r2);
  auto c = sample_uniform_box({-1, 0}, {1, 2}, 50, r3);
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical = identical && a[i] == b[i];
    differs = differs || a[i] != c[i];
  }
  CHECK(identical);
  CHECK(differs);
  for (int i = 0; i < 50; ++i) {
    CHECK(a(i, 0) >= -1);
    CHECK(a(i, 0) <= 1);
    CHECK(a(i, 1) >= 0);
    CHECK(a(i, 1) <= 2);
  }
}

TEST_CASE("latin hypercube designs are stratified per dimension") {
  Rng rng(11);
  int n = 37;
  auto x = latin_hypercube_maximin({0, -2, 10}, {1, 2, 20}, n, rng, 20);
  std::vector<double> lo{0, -2, 10}, hi{1, 2, 20};
  for (int j = 0; j < 3; ++j) {
    std::set<int> strata;
    for (int i = 0; i < n; ++i) {
      double u = (x(i, j) - lo[j]) / (hi[j] - lo[j]);
      CHECK(u >= 0.0);
      CHECK(u < 1.0 + 1e-12);
      strata.insert((int)(u * n));
    }
    CHECK((int)strata.size() == n);  // one point per stratum
  }
}

TEST_CASE("maximin criterion improves the minimum pairwise distance") {
  auto min_dist = [](const Mat& x) {
    double best = 1e300;
    for (int i = 0; i < x.rows(); ++i)
      for (int k = i + 1; k < x.rows(); ++k) {
        double s = 0;
        for (int j = 0; j < x.cols(); ++j) s += (x(i, j) - x(k, j)) * (x(i, j) - x(k, j));
        best = std::min(best, s);
      }
    return best;
  };
  double single = 0.0, tuned = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    Rng ra(100 + rep), rb(200 + rep);
    single += min_dist(latin_hypercube_maximin({0, 0}, {1, 1}, 30, ra, 1));
    tuned += min_dist(latin_hypercube_maximin({0, 0}, {1, 1}, 30, rb, 100));
  }
  CHECK(tuned > single);
}

TEST_CASE("halton points fill the unit cube") {
  auto h = halton_sequence(1000, 2);
  double m0 = 0, m1 = 0;
  for (int i = 0; i < 1000; ++i) {
    CHECK(h(i, 0) >= 0.0);
    CHECK(h(i, 0) < 1.0);
    m0 += h(i, 0);
    m1 += h(i, 1);
  }
  CHECK(m0 / 1000 == doctest::Approx(0.5).epsilon(0.01));
  CHECK(m1 / 1000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("dataset split sizes and validation") {
  Dataset ds;
  ds.inputs.resize(100, 2);
  ds.hf.resize(100, 1);
  Rng rng(3);
  ds.make_split(rng);
  CHECK(ds.train_idx.size() == 75);
  CHECK(ds.test_idx.size() == 25);
  ds.validate();

  ds.make_block_split(75);
  CHECK(ds.train_idx.front() == 0);
  CHECK(ds.test_idx.front() == 75);
  ds.validate();

  ds.train_idx[0] = ds.test_idx[0];  // break disjointness
  CHECK_THROWS_AS(ds.validate(), ShapeError);
}

TEST_CASE("dataset save/load round trip is exact") {
  Dataset ds;
  ds.inputs.resize(7, 2);
  ds.hf.resize(7, 1);
  ds.lf.resize(7, 1);
  Rng rng(17);
  for (std::size_t i = 0; i < ds.inputs.size(); ++i) ds.inputs[i] = rng.uniform(-1, 1);
  for (int i = 0; i < 7; ++i) {
    ds.hf(i, 0) = rng.normal();
    ds.lf(i, 0) = rng.normal() * 1e-7;
  }
  ds.scheme = SamplingScheme::latin_hypercube;
  ds.make_split(rng);
  std::string path = "/tmp/mfb_test_dataset.csv";
  save_dataset(ds, path);
  Dataset back = load_dataset(path);
  REQUIRE(back.n() == 7);
  REQUIRE(back.has_lf());
  CHECK(back.scheme == SamplingScheme::latin_hypercube);
  for (std::size_t i = 0; i < ds.inputs.size(); ++i) CHECK(back.inputs[i] == ds.inputs[i]);
  for (std::size_t i = 0; i < ds.hf.size(); ++i) CHECK(back.hf[i] == ds.hf[i]);
  for (std::size_t i = 0; i < ds.lf.size(); ++i) CHECK(back.lf[i] == ds.lf[i]);
  CHECK(back.train_idx == ds.train_idx);
  CHECK(back.test_idx == ds.test_idx);
  std::remove(path.c_str());
  std::remove((path + ".split").c_str());
}

TEST_CASE("dataset without low fidelity loads as such") {
  Dataset ds;
  ds.inputs.resize(4, 3);
  ds.hf.resize(4, 2);
  Rng rng(1);
  ds.make_split(rng);
  std::string path = "/tmp/mfb_test_dataset2.csv";
  save_dataset(ds, path);
  Dataset back = load_dataset(path);
  CHECK(!back.has_lf());
  CHECK(back.outputs() == 2);
  std::remove(path.c_str());
  std::remove((path + ".split").c_str());
}
