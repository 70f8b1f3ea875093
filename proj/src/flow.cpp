#include "mfb/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mfb/errors.hpp"
#include "mfb/tape.hpp"

namespace mfb {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kSplineBound = 5.0;  // spline acts on [-B, B], identity outside
constexpr double kScaleCap = 4.0;     // coupling log-scale clamp
constexpr double kMinBinParam = 1e-3;

int spline_bins(const FlowArch& a) { return std::max(2, a.neurons); }
int scalar_stages(const FlowArch& a) { return 2 * std::max(1, a.blocks); }

struct SplineKnots {
  std::vector<double> x, y, d;  // K+1 knots, K+1 derivatives
};

void softplus_vec(const Mat& theta, std::vector<double>& out) {
  out.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double v = theta[i];
    out[i] = (v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v))) + kMinBinParam;
  }
}

SplineKnots make_knots(const ScalarStage& st) {
  int K = st.theta_w.cols();
  SplineKnots k;
  std::vector<double> w, h, dd;
  softplus_vec(st.theta_w, w);
  softplus_vec(st.theta_h, h);
  softplus_vec(st.theta_d, dd);
  double wt = std::accumulate(w.begin(), w.end(), 0.0);
  double ht = std::accumulate(h.begin(), h.end(), 0.0);
  k.x.assign(K + 1, -kSplineBound);
  k.y.assign(K + 1, -kSplineBound);
  for (int j = 0; j < K; ++j) {
    k.x[j + 1] = k.x[j] + 2.0 * kSplineBound * (w[j] / wt);
    k.y[j + 1] = k.y[j] + 2.0 * kSplineBound * (h[j] / ht);
  }
  k.d.assign(K + 1, 1.0);
  for (int j = 1; j < K; ++j) k.d[j] = dd[j - 1];
  return k;
}

int find_bin(const std::vector<double>& knots, double v) {
  int i = (int)(std::upper_bound(knots.begin(), knots.end(), v) - knots.begin()) - 1;
  return std::clamp(i, 0, (int)knots.size() - 2);
}

/// Monotone rational-quadratic segment evaluation; returns y and dy/dv.
void spline_fwd(const SplineKnots& k, double v, double* y, double* dy) {
  if (v <= -kSplineBound || v >= kSplineBound) {
    *y = v;
    *dy = 1.0;
    return;
  }
  int i = find_bin(k.x, v);
  double w = k.x[i + 1] - k.x[i], h = k.y[i + 1] - k.y[i];
  double s = h / w;
  double xi = (v - k.x[i]) / w;
  double om = 1.0 - xi;
  double c = k.d[i + 1] + k.d[i] - 2.0 * s;
  double den = s + c * xi * om;
  *y = k.y[i] + h * (s * xi * xi + k.d[i] * xi * om) / den;
  *dy = s * s * (k.d[i + 1] * xi * xi + 2.0 * s * xi * om + k.d[i] * om * om) / (den * den);
}

/// Inverse of spline_fwd via the stable quadratic root.
double spline_inv(const SplineKnots& k, double y) {
  if (y <= -kSplineBound || y >= kSplineBound) return y;
  int i = find_bin(k.y, y);
  double w = k.x[i + 1] - k.x[i], h = k.y[i + 1] - k.y[i];
  double s = h / w;
  double dy = y - k.y[i];
  double c2 = k.d[i + 1] + k.d[i] - 2.0 * s;
  double a = h * (s - k.d[i]) + dy * c2;
  double b = h * k.d[i] - dy * c2;
  double c = -s * dy;
  double disc = std::max(b * b - 4.0 * a * c, 0.0);
  double xi = 2.0 * c / (-b - std::sqrt(disc));
  xi = std::clamp(xi, 0.0, 1.0);
  return k.x[i] + xi * w;
}

MlpNet make_coupling_net(int dim, const FlowArch& arch, Rng& rng) {
  LayerSpec spec{std::max(1, arch.layers), std::max(1, arch.neurons)};
  MlpNet net = MlpNet::glorot(spec.expand(dim, dim), rng);
  net.weights.back().fill(0.0);  // identity map at initialization
  net.biases.back().fill(0.0);
  return net;
}

Mat even_mask(int dim, bool odd) {
  Mat m(1, dim);
  for (int j = 0; j < dim; ++j) m[j] = (j % 2 == (odd ? 1 : 0)) ? 1.0 : 0.0;
  return m;
}

std::vector<ScalarStage> init_stages(const FlowArch& arch) {
  int K = spline_bins(arch);
  double theta_d0 = std::log(std::exp(1.0 - kMinBinParam) - 1.0);
  std::vector<ScalarStage> stages(scalar_stages(arch));
  for (auto& st : stages) {
    st.theta_w.resize(1, K);
    st.theta_h.resize(1, K);
    st.theta_d.resize(1, K - 1);
    st.theta_d.fill(theta_d0);
  }
  return stages;
}

std::vector<AffineCoupling> init_couplings(int dim, const FlowArch& arch, Rng& rng) {
  std::vector<AffineCoupling> cs;
  for (int b = 0; b < std::max(1, arch.blocks); ++b) {
    for (int half = 0; half < 2; ++half) {
      AffineCoupling c;
      c.mask = even_mask(dim, half == 1);
      c.s_net = make_coupling_net(dim, arch, rng);
      c.t_net = make_coupling_net(dim, arch, rng);
      cs.push_back(std::move(c));
    }
  }
  return cs;
}

// --- tape loss builders -----------------------------------------------------

struct ScalarStageLeaves {
  Tape::Id log_scale, shift, theta_w, theta_h, theta_d;
};

/// Mean negative log-likelihood of standardized 1-D samples under the stage
/// stack; eager values let each spline pick its bins per epoch.
Tape::Id scalar_flow_nll(Tape& t, std::vector<ScalarStageLeaves>& leaves, const Mat& u0,
                         const std::vector<ScalarStage>& stages, const FlowArch& arch) {
  int N = u0.rows();
  int K = spline_bins(arch);
  // constant cumulative-sum matrix: row i contributes to columns j > i
  Mat tri(K, K + 1);
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j <= K; ++j) tri(i, j) = 1.0;
  Mat onev(1, 1);
  onev[0] = 1.0;

  auto u = t.leaf(u0);
  auto ld = t.leaf(Mat(1, 1));  // accumulated log|det|
  for (auto& lv : leaves) {
    // affine (normalizing direction): v = (u - shift) * exp(-log_scale)
    auto v = t.mul_scalar(t.add_rowvec(u, t.neg(lv.shift)), t.exp(t.neg(lv.log_scale)));
    ld = t.add(ld, t.scale(lv.log_scale, -(double)N));
    // knots
    auto wfrac = t.add_const(t.softplus(lv.theta_w), kMinBinParam);
    auto xk_row = t.add_const(
        t.scale(t.matmul(t.div_scalar(wfrac, t.sum(wfrac)), t.leaf(tri)), 2.0 * kSplineBound),
        -kSplineBound);
    auto hfrac = t.add_const(t.softplus(lv.theta_h), kMinBinParam);
    auto yk_row = t.add_const(
        t.scale(t.matmul(t.div_scalar(hfrac, t.sum(hfrac)), t.leaf(tri)), 2.0 * kSplineBound),
        -kSplineBound);
    auto ones = t.leaf(onev);
    auto d_row = t.concat_cols(t.concat_cols(ones, t.add_const(t.softplus(lv.theta_d), kMinBinParam)), ones);

    // bins and inside mask from current values
    const Mat& vv = t.val(v);
    const Mat& xkv = t.val(xk_row);
    std::vector<double> xknots(xkv.data(), xkv.data() + xkv.size());
    Mat inside(N, 1);
    std::vector<int> bin(N), binp(N);
    for (int i = 0; i < N; ++i) {
      double vi = vv[i];
      bool in = vi > -kSplineBound && vi < kSplineBound;
      inside[i] = in ? 1.0 : 0.0;
      int b = in ? find_bin(xknots, vi) : find_bin(xknots, 0.0);
      bin[i] = b;
      binp[i] = b + 1;
    }
    auto mask = t.leaf(inside);
    auto inv_mask = t.add_const(t.neg(mask), 1.0);
    auto vin = t.mul(v, mask);  // outside elements pinned to 0 (mid-range)

    auto xk = t.gather(xk_row, bin);
    auto xk1 = t.gather(xk_row, binp);
    auto yk = t.gather(yk_row, bin);
    auto yk1 = t.gather(yk_row, binp);
    auto dk = t.gather(d_row, bin);
    auto dk1 = t.gather(d_row, binp);
    auto wk = t.sub(xk1, xk);
    auto hk = t.sub(yk1, yk);
    auto sk = t.div(hk, wk);
    auto xi = t.div(t.sub(vin, xk), wk);
    auto om = t.add_const(t.neg(xi), 1.0);
    auto xiom = t.mul(xi, om);
    auto cc = t.sub(t.add(dk1, dk), t.scale(sk, 2.0));
    auto den = t.add(sk, t.mul(cc, xiom));
    auto num = t.mul(hk, t.add(t.mul(sk, t.square(xi)), t.mul(dk, xiom)));
    auto w_in = t.add(yk, t.div(num, den));
    auto dnum = t.add(t.add(t.mul(dk1, t.square(xi)), t.mul(t.scale(sk, 2.0), xiom)),
                      t.mul(dk, t.square(om)));
    auto dy = t.div(t.mul(t.square(sk), dnum), t.square(den));
    auto dlog = t.mul(t.log(dy), mask);
    ld = t.add(ld, t.sum(dlog));
    u = t.add(t.mul(w_in, mask), t.mul(v, inv_mask));
  }
  auto nll = t.scale(t.sub(t.scale(t.sum(t.square(u)), 0.5), ld), 1.0 / (double)N);
  return t.add_const(nll, 0.5 * kLog2Pi);
}

struct CouplingLeaves {
  TapeNet s_net, t_net;
  Tape::Id mask, inv_mask;
};

Tape::Id realnvp_nll(Tape& t, std::vector<CouplingLeaves>& leaves, const Mat& u0) {
  int N = u0.rows(), d = u0.cols();
  auto u = t.leaf(u0);
  auto s_masked_sum = t.leaf(Mat(1, 1));
  for (auto& lv : leaves) {
    auto xa = t.mul_rowvec(u, lv.mask);
    auto sraw = lv.s_net.apply(t, xa);
    auto s = t.scale(t.tanh(t.scale(sraw, 1.0 / kScaleCap)), kScaleCap);
    auto tr = lv.t_net.apply(t, xa);
    auto z_trans = t.mul(t.sub(u, tr), t.exp(t.neg(s)));
    u = t.add(t.mul_rowvec(u, lv.mask), t.mul_rowvec(z_trans, lv.inv_mask));
    s_masked_sum = t.add(s_masked_sum, t.sum(t.mul_rowvec(s, lv.inv_mask)));
  }
  auto nll = t.scale(t.add(t.scale(t.sum(t.square(u)), 0.5), s_masked_sum), 1.0 / (double)N);
  return t.add_const(nll, 0.5 * (double)d * kLog2Pi);
}

}  // namespace

double FlowModel::log_density(const std::vector<double>& delta) const {
  if ((int)delta.size() != dim_) throw ShapeError("FlowModel: input dimension mismatch");
  return log_density(delta.data());
}

double FlowModel::log_density(const double* delta) const {
  std::vector<double> x(delta, delta + dim_);
  double ld = 0.0;
  std::vector<double> z = to_base(x, &ld);
  double q = 0.0;
  for (double v : z) q += v * v;
  return -0.5 * q - 0.5 * dim_ * kLog2Pi + ld;
}

std::vector<double> FlowModel::to_base(const std::vector<double>& delta, double* logdet) const {
  if ((int)delta.size() != dim_) throw ShapeError("FlowModel to_base: dimension mismatch");
  std::vector<double> u = delta;
  double ld = 0.0;
  for (int j = 0; j < dim_; ++j) {
    u[j] = (u[j] - std_.mean[j]) / std_.std[j];
    ld -= std::log(std_.std[j]);
  }
  if (dim_ == 1) {
    for (const auto& st : stages_) {
      double v = (u[0] - st.shift) * std::exp(-st.log_scale);
      ld -= st.log_scale;
      SplineKnots k = make_knots(st);
      double y, dy;
      spline_fwd(k, v, &y, &dy);
      ld += std::log(dy);
      u[0] = y;
    }
  } else {
    Mat row(1, dim_);
    for (const auto& c : couplings_) {
      for (int j = 0; j < dim_; ++j) row[j] = u[j] * c.mask[j];
      Mat sraw = c.s_net.forward(row);
      Mat tr = c.t_net.forward(row);
      for (int j = 0; j < dim_; ++j) {
        if (c.mask[j] != 0.0) continue;
        double s = kScaleCap * std::tanh(sraw[j] / kScaleCap);
        u[j] = (u[j] - tr[j]) * std::exp(-s);
        ld -= s;
      }
    }
  }
  if (logdet) *logdet = ld;
  return u;
}

std::vector<double> FlowModel::from_base(const std::vector<double>& z, double* logdet) const {
  if ((int)z.size() != dim_) throw ShapeError("FlowModel from_base: dimension mismatch");
  std::vector<double> u = z;
  double ld = 0.0;
  if (dim_ == 1) {
    for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
      SplineKnots k = make_knots(*it);
      double v = spline_inv(k, u[0]);
      double y, dy;
      spline_fwd(k, v, &y, &dy);
      ld -= std::log(dy);
      u[0] = v * std::exp(it->log_scale) + it->shift;
      ld += it->log_scale;
    }
  } else {
    Mat row(1, dim_);
    for (auto it = couplings_.rbegin(); it != couplings_.rend(); ++it) {
      for (int j = 0; j < dim_; ++j) row[j] = u[j] * it->mask[j];
      Mat sraw = it->s_net.forward(row);
      Mat tr = it->t_net.forward(row);
      for (int j = 0; j < dim_; ++j) {
        if (it->mask[j] != 0.0) continue;
        double s = kScaleCap * std::tanh(sraw[j] / kScaleCap);
        u[j] = u[j] * std::exp(s) + tr[j];
        ld += s;
      }
    }
  }
  for (int j = 0; j < dim_; ++j) {
    u[j] = u[j] * std_.std[j] + std_.mean[j];
    ld += std::log(std_.std[j]);
  }
  if (logdet) *logdet = ld;
  return u;
}

Mat FlowModel::sample(int n, Rng& rng) const {
  if (n < 1) throw ConfigError("FlowModel sample: need n >= 1");
  Mat out(n, dim_);
  std::vector<double> z(dim_);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim_; ++j) z[j] = rng.normal();
    std::vector<double> x = from_base(z);
    for (int j = 0; j < dim_; ++j) out(i, j) = x[j];
  }
  return out;
}

FlowModel FlowModel::identity(int dim, const FlowArch& arch, Standardizer st) {
  FlowModel f;
  f.dim_ = dim;
  f.arch_ = arch;
  f.std_ = std::move(st);
  if ((int)f.std_.mean.size() != dim) throw ShapeError("identity flow: standardizer mismatch");
  Rng rng(0);
  if (dim == 1)
    f.stages_ = init_stages(arch);
  else
    f.couplings_ = init_couplings(dim, arch, rng);
  return f;
}

FlowModel flow_from_parts(int dim, FlowArch arch, Standardizer st,
                          std::vector<AffineCoupling> couplings,
                          std::vector<ScalarStage> stages) {
  FlowModel f;
  f.dim_ = dim;
  f.arch_ = arch;
  f.std_ = std::move(st);
  f.couplings_ = std::move(couplings);
  f.stages_ = std::move(stages);
  return f;
}

FlowModel train_flow(const NoiseSampleSet& samples, const TrainConfig& cfg,
                     const FlowArch& arch) {
  return train_flow(samples.deltas, cfg, arch);
}

FlowModel train_flow(const Mat& deltas, const TrainConfig& cfg, const FlowArch& arch) {
  cfg.validate();
  if (deltas.rows() < 4) throw ConfigError("train_flow: need at least 4 samples");
  int dim = deltas.cols();
  int J = deltas.rows();

  Rng rng(cfg.seed);
  std::vector<int> perm(J);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = J - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  int n_train = (int)(0.75 * J);
  Mat tr(n_train, dim), te(J - n_train, dim);
  for (int i = 0; i < n_train; ++i)
    for (int j = 0; j < dim; ++j) tr(i, j) = deltas(perm[i], j);
  for (int i = n_train; i < J; ++i)
    for (int j = 0; j < dim; ++j) te(i - n_train, j) = deltas(perm[i], j);

  FlowModel f;
  f.dim_ = dim;
  f.arch_ = arch;
  f.std_ = Standardizer::fit(tr);
  Mat u0 = f.std_.apply(tr);

  std::vector<Mat*> params;
  if (dim == 1) {
    f.stages_ = init_stages(arch);
    for (auto& st : f.stages_) {
      // affine parameters live in 1x1 mats inside the tape; mirror them here
      params.push_back(&st.theta_w);
      params.push_back(&st.theta_h);
      params.push_back(&st.theta_d);
    }
  } else {
    f.couplings_ = init_couplings(dim, arch, rng);
    for (auto& c : f.couplings_) {
      for (std::size_t l = 0; l < c.s_net.weights.size(); ++l) {
        params.push_back(&c.s_net.weights[l]);
        params.push_back(&c.s_net.biases[l]);
      }
      for (std::size_t l = 0; l < c.t_net.weights.size(); ++l) {
        params.push_back(&c.t_net.weights[l]);
        params.push_back(&c.t_net.biases[l]);
      }
    }
  }

  // scalar-flow affine parameters need Mat storage for Adam
  std::vector<Mat> affine_store;
  if (dim == 1) {
    affine_store.resize(f.stages_.size());
    for (std::size_t i = 0; i < f.stages_.size(); ++i) {
      affine_store[i].resize(1, 2);
      params.push_back(&affine_store[i]);
    }
  }
  AdamState st = AdamState::init(params);

  double final_nll = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape t;
    std::vector<const Mat*> grads;
    Tape::Id nll;
    if (dim == 1) {
      std::vector<ScalarStageLeaves> leaves(f.stages_.size());
      for (std::size_t i = 0; i < f.stages_.size(); ++i) {
        Mat ls(1, 1), sh(1, 1);
        ls[0] = affine_store[i][0];
        sh[0] = affine_store[i][1];
        leaves[i].log_scale = t.leaf(ls, true);
        leaves[i].shift = t.leaf(sh, true);
        leaves[i].theta_w = t.leaf(f.stages_[i].theta_w, true);
        leaves[i].theta_h = t.leaf(f.stages_[i].theta_h, true);
        leaves[i].theta_d = t.leaf(f.stages_[i].theta_d, true);
        f.stages_[i].log_scale = ls[0];
        f.stages_[i].shift = sh[0];
      }
      nll = scalar_flow_nll(t, leaves, u0, f.stages_, arch);
      double lv = t.val(nll)[0];
      if (!std::isfinite(lv))
        throw NumericError("train_flow: non-finite log-likelihood at epoch " +
                           std::to_string(epoch));
      t.backward(nll);
      // grads ordered to match `params`
      static thread_local std::vector<Mat> affine_grads;
      affine_grads.assign(f.stages_.size(), Mat(1, 2));
      for (std::size_t i = 0; i < f.stages_.size(); ++i) {
        grads.push_back(&t.grad_or_zero(leaves[i].theta_w));
        grads.push_back(&t.grad_or_zero(leaves[i].theta_h));
        grads.push_back(&t.grad_or_zero(leaves[i].theta_d));
      }
      for (std::size_t i = 0; i < f.stages_.size(); ++i) {
        const Mat& gls = t.grad(leaves[i].log_scale);
        const Mat& gsh = t.grad(leaves[i].shift);
        affine_grads[i][0] = gls.empty() ? 0.0 : gls[0];
        affine_grads[i][1] = gsh.empty() ? 0.0 : gsh[0];
        grads.push_back(&affine_grads[i]);
      }
      adam_step(params, grads, st, cfg, epoch);
      for (std::size_t i = 0; i < f.stages_.size(); ++i) {
        f.stages_[i].log_scale = affine_store[i][0];
        f.stages_[i].shift = affine_store[i][1];
      }
      final_nll = lv;
    } else {
      std::vector<CouplingLeaves> leaves(f.couplings_.size());
      Mat inv(1, dim);
      for (std::size_t i = 0; i < f.couplings_.size(); ++i) {
        leaves[i].s_net = attach(t, f.couplings_[i].s_net);
        leaves[i].t_net = attach(t, f.couplings_[i].t_net);
        leaves[i].mask = t.leaf(f.couplings_[i].mask);
        for (int j = 0; j < dim; ++j) inv[j] = 1.0 - f.couplings_[i].mask[j];
        leaves[i].inv_mask = t.leaf(inv);
      }
      nll = realnvp_nll(t, leaves, u0);
      double lv = t.val(nll)[0];
      if (!std::isfinite(lv))
        throw NumericError("train_flow: non-finite log-likelihood at epoch " +
                           std::to_string(epoch));
      t.backward(nll);
      for (auto& lv2 : leaves) {
        for (std::size_t l = 0; l < lv2.s_net.w.size(); ++l) {
          grads.push_back(&t.grad_or_zero(lv2.s_net.w[l]));
          grads.push_back(&t.grad_or_zero(lv2.s_net.b[l]));
        }
        for (std::size_t l = 0; l < lv2.t_net.w.size(); ++l) {
          grads.push_back(&t.grad_or_zero(lv2.t_net.w[l]));
          grads.push_back(&t.grad_or_zero(lv2.t_net.b[l]));
        }
      }
      adam_step(params, grads, st, cfg, epoch);
      final_nll = t.val(nll)[0];
    }
    if (epoch % 100 == 0 || epoch == cfg.epochs - 1) f.loglik_history.push_back(-final_nll);
  }

  auto mean_ll = [&](const Mat& rows) {
    double acc = 0.0;
    std::vector<double> row(dim);
    for (int i = 0; i < rows.rows(); ++i) {
      for (int j = 0; j < dim; ++j) row[j] = rows(i, j);
      acc += f.log_density(row.data());
    }
    return rows.rows() ? acc / rows.rows() : 0.0;
  };
  f.train_loglik = mean_ll(tr);
  f.test_loglik = mean_ll(te);
  return f;
}

}  // namespace mfb
