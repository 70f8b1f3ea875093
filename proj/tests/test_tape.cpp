#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "mfb/errors.hpp"
#include "mfb/mlp.hpp"
#include "mfb/rng.hpp"
#include "mfb/tape.hpp"

using namespace mfb;

namespace {

// Central finite differences of a scalar loss with respect to one matrix.
Mat fd_grad(Mat& param, const std::function<double()>& eval, double h = 1e-5) {
  Mat g(param.rows(), param.cols());
  for (std::size_t i = 0; i < param.size(); ++i) {
    double save = param[i];
    param[i] = save + h;
    double up = eval();
    param[i] = save - h;
    double dn = eval();
    param[i] = save;
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

void check_grads_close(const Mat& ad, const Mat& fd, double rtol = 1e-5) {
  REQUIRE(ad.same_shape(fd));
  for (std::size_t i = 0; i < ad.size(); ++i) {
    if (std::fabs(ad[i]) <= 1e-8 && std::fabs(fd[i]) <= 1e-6) continue;
    CHECK(std::fabs(ad[i] - fd[i]) <= rtol * std::max(std::fabs(ad[i]), std::fabs(fd[i])));
  }
}

}  // namespace

TEST_CASE("tape forward values") {
  Tape t;
  auto a = t.leaf(Mat(2, 2, {1, 2, 3, 4}));
  auto b = t.leaf(Mat(2, 2, {5, 6, 7, 8}));
  auto c = t.matmul(a, b);
  CHECK(t.val(c)(0, 0) == 19);
  CHECK(t.val(c)(0, 1) == 22);
  CHECK(t.val(c)(1, 0) == 43);
  CHECK(t.val(c)(1, 1) == 50);
  auto s = t.sum(c);
  CHECK(t.val(s)[0] == 134);
  auto m = t.mean(c);
  CHECK(t.val(m)[0] == doctest::Approx(33.5));
  auto r = t.add_rowvec(a, t.leaf(Mat::row({10, 20})));
  CHECK(t.val(r)(1, 1) == 24);
  auto gt = t.gather(t.leaf(Mat::row({1.5, 2.5, 3.5})), {2, 0, 2});
  CHECK(t.val(gt)(0, 0) == 3.5);
  CHECK(t.val(gt)(1, 0) == 1.5);
  CHECK(t.val(gt)(2, 0) == 3.5);
  auto cc = t.concat_cols(t.leaf(Mat::row({1, 2})), t.leaf(Mat::row({3})));
  CHECK(t.val(cc).cols() == 3);
  CHECK(t.val(cc)(0, 2) == 3);
}

TEST_CASE("constant loss gives zero gradients") {
  Tape t;
  Mat w0(1, 1, {2.0});
  auto w = t.leaf(w0, true);
  auto loss = t.mean(t.leaf(Mat(1, 1, {7.0})));  // does not depend on w
  t.backward(loss);
  CHECK(t.grad(w).empty());  // untouched == all-zero gradient
}

TEST_CASE("quadratic loss gradient at w=1 is -4") {
  Tape t;
  auto w = t.leaf(Mat(1, 1, {1.0}), true);
  auto loss = t.square(t.add_const(w, -3.0));  // (w-3)^2
  t.backward(loss);
  CHECK(t.grad(w)[0] == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("backward requires a scalar loss") {
  Tape t;
  auto a = t.leaf(Mat(2, 2), true);
  auto b = t.square(a);
  CHECK_THROWS_AS(t.backward(b), ShapeError);
}

TEST_CASE("mlp gradients match central finite differences") {
  Rng rng(11);
  MlpNet net = MlpNet::glorot({2, 4, 1}, rng);
  Mat x(8, 2), y(8, 1);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.uniform(-1, 1);

  auto eval = [&]() {
    Tape t;
    TapeNet tn = attach(t, net);
    auto pred = tn.apply(t, t.leaf(x));
    auto loss = t.mean(t.square(t.sub(pred, t.leaf(y))));
    return t.val(loss)[0];
  };

  Tape t;
  TapeNet tn = attach(t, net);
  auto pred = tn.apply(t, t.leaf(x));
  auto loss = t.mean(t.square(t.sub(pred, t.leaf(y))));
  t.backward(loss);

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    check_grads_close(t.grad(tn.w[l]), fd_grad(net.weights[l], eval));
    check_grads_close(t.grad(tn.b[l]), fd_grad(net.biases[l], eval));
  }
}

TEST_CASE("gradient check across depths and loss compositions") {
  Rng rng(5);
  for (int depth : {1, 2, 3}) {
    std::vector<int> sizes{3};
    for (int l = 0; l < depth; ++l) sizes.push_back(5);
    sizes.push_back(2);
    MlpNet net = MlpNet::glorot(sizes, rng);
    Mat x(6, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);

    // exp/log/square composition keeps everything positive where needed
    auto eval = [&]() {
      Tape t;
      TapeNet tn = attach(t, net);
      auto out = tn.apply(t, t.leaf(x));
      auto pos = t.exp(out);
      auto m = t.mean(t.add(t.square(out), t.log(t.add_const(pos, 1.0))));
      return t.val(m)[0];
    };
    Tape t;
    TapeNet tn = attach(t, net);
    auto out = tn.apply(t, t.leaf(x));
    auto pos = t.exp(out);
    auto m = t.mean(t.add(t.square(out), t.log(t.add_const(pos, 1.0))));
    t.backward(m);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      check_grads_close(t.grad(tn.w[l]), fd_grad(net.weights[l], eval));
      check_grads_close(t.grad(tn.b[l]), fd_grad(net.biases[l], eval));
    }
  }
}

TEST_CASE("gradients flow through gather, scalar broadcasts, softplus, div, concat") {
  Rng rng(9);
  Mat theta0(1, 4);
  for (std::size_t i = 0; i < theta0.size(); ++i) theta0[i] = rng.uniform(0.2, 1.5);
  Mat phi0(1, 2);
  for (std::size_t i = 0; i < phi0.size(); ++i) phi0[i] = rng.uniform(0.5, 1.0);
  std::vector<int> idx = {0, 2, 3, 1, 2, 0};

  auto build = [&](Tape& t, Tape::Id& th, Tape::Id& ph) {
    th = t.leaf(theta0, true);
    ph = t.leaf(phi0, true);
    auto sp = t.softplus(th);                   // positive params
    auto total = t.sum(sp);                     // 1x1
    auto normed = t.div_scalar(sp, total);      // softmax-like
    auto both = t.concat_cols(normed, ph);      // 1x6
    auto gathered = t.gather(both, idx);        // 6x1
    auto scaled = t.mul_scalar(gathered, total);
    auto quot = t.div(scaled, t.add_const(gathered, 2.0));
    return t.mean(t.square(quot));
  };

  auto eval = [&]() {
    Tape t;
    Tape::Id th, ph;
    auto loss = build(t, th, ph);
    return t.val(loss)[0];
  };

  Tape t;
  Tape::Id th, ph;
  auto loss = build(t, th, ph);
  t.backward(loss);
  check_grads_close(t.grad(th), fd_grad(theta0, eval), 2e-5);
  check_grads_close(t.grad(ph), fd_grad(phi0, eval), 2e-5);
}

TEST_CASE("tape mlp forward is bitwise identical to plain forward") {
  Rng rng(3);
  MlpNet net = MlpNet::glorot({2, 7, 7, 1}, rng);
  Mat x(13, 2);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-2, 2);
  Mat plain = net.forward(x);
  Tape t;
  TapeNet tn = attach(t, net);
  auto out = tn.apply(t, t.leaf(x));
  REQUIRE(plain.same_shape(t.val(out)));
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(plain[i] == t.val(out)[i]);
}
