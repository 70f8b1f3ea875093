#include "mfb/mlp.hpp"

#include <cmath>
#include <string>

#include "mfb/errors.hpp"
#include "mfb/kernels.hpp"

namespace mfb {

namespace {
const kernels::Ops& K() { return kernels::ops(); }
}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
  if (!(scheduler_step > 0) || scheduler_step > 1.0)
    throw ConfigError("TrainConfig: scheduler_step must be in (0,1]");
  if (weight_decay < 0) throw ConfigError("TrainConfig: weight_decay must be >= 0");
}

MlpNet MlpNet::zeros(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ConfigError("MlpNet: need at least input and output layer");
  for (int s : sizes)
    if (s < 1) throw ConfigError("MlpNet: layer sizes must be positive");
  MlpNet net;
  net.layer_sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.weights.emplace_back(sizes[l], sizes[l + 1]);
    net.biases.emplace_back(1, sizes[l + 1]);
  }
  return net;
}

MlpNet MlpNet::glorot(const std::vector<int>& sizes, Rng& rng) {
  MlpNet net = zeros(sizes);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    double a = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    Mat& w = net.weights[l];
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-a, a);
  }
  return net;
}

std::size_t MlpNet::n_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Mat MlpNet::forward(const Mat& x) const {
  if (x.cols() != input_dim())
    throw ShapeError("MlpNet forward: input has " + std::to_string(x.cols()) +
                     " columns, expected " + std::to_string(input_dim()));
  Mat cur = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Mat& w = weights[l];
    Mat next(cur.rows(), w.cols());
    K().matmul_nn(cur.data(), w.data(), next.data(), cur.rows(), cur.cols(), w.cols());
    for (int i = 0; i < next.rows(); ++i)
      K().add(next.row_ptr(i), biases[l].data(), next.row_ptr(i), (std::size_t)w.cols());
    if (l + 1 < weights.size()) K().tanh(next.data(), next.data(), next.size());
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> MlpNet::forward1(const std::vector<double>& x) const {
  Mat m(1, (int)x.size());
  for (std::size_t j = 0; j < x.size(); ++j) m[j] = x[j];
  Mat out = forward(m);
  return std::vector<double>(out.data(), out.data() + out.size());
}

TapeNet attach(Tape& t, const MlpNet& net) {
  TapeNet tn;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    tn.w.push_back(t.leaf(net.weights[l], true));
    tn.b.push_back(t.leaf(net.biases[l], true));
  }
  return tn;
}

Tape::Id TapeNet::apply(Tape& t, Tape::Id x) const {
  Tape::Id cur = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    cur = t.add_rowvec(t.matmul(cur, w[l]), b[l]);
    if (l + 1 < w.size()) cur = t.tanh(cur);
  }
  return cur;
}

std::vector<int> LayerSpec::expand(int in_dim, int out_dim) const {
  if (hidden_layers < 0 || neurons < 1) throw ConfigError("LayerSpec: invalid architecture");
  std::vector<int> sizes;
  sizes.push_back(in_dim);
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(neurons);
  sizes.push_back(out_dim);
  return sizes;
}

AdamState AdamState::init(const std::vector<Mat*>& params) {
  AdamState st;
  for (const Mat* p : params) {
    st.m.emplace_back(p->rows(), p->cols());
    st.v.emplace_back(p->rows(), p->cols());
  }
  return st;
}

void adam_step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads,
               AdamState& state, const TrainConfig& cfg, int epoch, const AdamSettings& s) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  state.step += 1;
  double lr = effective_lr(cfg, epoch);
  double bc1 = 1.0 - std::pow(s.beta1, (double)state.step);
  double bc2 = 1.0 - std::pow(s.beta2, (double)state.step);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Mat& p = *params[k];
    const Mat& g = *grads[k];
    if (!p.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch");
    Mat& m = state.m[k];
    Mat& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double gi = g[i];
      if (!std::isfinite(gi))
        throw NumericError("adam_step: non-finite gradient at epoch " + std::to_string(epoch));
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] -= lr * (mhat / (std::sqrt(vhat) + s.eps) + cfg.weight_decay * p[i]);
    }
  }
}

Standardizer Standardizer::fit(const Mat& data, double std_floor) {
  if (data.rows() < 1) throw ShapeError("Standardizer: empty data");
  Standardizer st;
  int d = data.cols();
  st.mean.assign(d, 0.0);
  st.std.assign(d, 0.0);
  for (int i = 0; i < data.rows(); ++i)
    for (int j = 0; j < d; ++j) st.mean[j] += data(i, j);
  for (int j = 0; j < d; ++j) st.mean[j] /= data.rows();
  for (int i = 0; i < data.rows(); ++i)
    for (int j = 0; j < d; ++j) {
      double c = data(i, j) - st.mean[j];
      st.std[j] += c * c;
    }
  for (int j = 0; j < d; ++j) {
    st.std[j] = data.rows() > 1 ? std::sqrt(st.std[j] / (data.rows() - 1)) : 0.0;
    if (st.std[j] < std_floor) st.std[j] = std_floor;
  }
  return st;
}

Mat Standardizer::apply(const Mat& raw) const {
  if (raw.cols() != dim()) throw ShapeError("Standardizer apply: dimension mismatch");
  Mat out(raw.rows(), raw.cols());
  for (int i = 0; i < raw.rows(); ++i)
    for (int j = 0; j < raw.cols(); ++j) out(i, j) = (raw(i, j) - mean[j]) / std[j];
  return out;
}

Mat Standardizer::invert(const Mat& normed) const {
  if (normed.cols() != dim()) throw ShapeError("Standardizer invert: dimension mismatch");
  Mat out(normed.rows(), normed.cols());
  for (int i = 0; i < normed.rows(); ++i)
    for (int j = 0; j < normed.cols(); ++j) out(i, j) = normed(i, j) * std[j] + mean[j];
  return out;
}

void Standardizer::apply_inplace(double* row) const {
  for (int j = 0; j < dim(); ++j) row[j] = (row[j] - mean[j]) / std[j];
}

void Standardizer::invert_inplace(double* row) const {
  for (int j = 0; j < dim(); ++j) row[j] = row[j] * std[j] + mean[j];
}

}  // namespace mfb
