#include "mfb/surrogates.hpp"

#include <cmath>
#include <string>

#include "mfb/errors.hpp"
#include "mfb/kernels.hpp"

namespace mfb {

namespace {

Mat labels_for(const Dataset& data, Target target) {
  if (target == Target::direct) return data.hf;
  if (!data.has_lf())
    throw ConfigError("discrepancy target requires low-fidelity outputs in the dataset");
  Mat d(data.n(), data.outputs());
  kernels::ops().sub(data.hf.data(), data.lf.data(), d.data(), d.size());
  return d;
}

double raw_mse(const Mat& pred, const Mat& label) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double e = pred[i] - label[i];
    s += e * e;
  }
  return pred.size() ? s / (double)pred.size() : 0.0;
}

}  // namespace

std::string target_name(Target t) { return t == Target::direct ? "direct" : "discrepancy"; }

Target target_from_name(const std::string& s) {
  if (s == "direct") return Target::direct;
  if (s == "discrepancy") return Target::discrepancy;
  throw ConfigError("unknown surrogate target: " + s);
}

Mat DenseSurrogate::predict(const Mat& x) const {
  return out_std.invert(net.forward(in_std.apply(x)));
}

std::vector<double> DenseSurrogate::predict1(const std::vector<double>& x) const {
  Mat m(1, (int)x.size());
  for (std::size_t j = 0; j < x.size(); ++j) m[j] = x[j];
  Mat out = predict(m);
  return std::vector<double>(out.data(), out.data() + out.size());
}

DenseSurrogate train_dense(const Dataset& data, Target target, const TrainConfig& cfg,
                           const LayerSpec& arch) {
  cfg.validate();
  data.validate();
  Mat labels = labels_for(data, target);
  Mat x_tr = data.gather_inputs(data.train_idx);
  Mat y_tr = data.gather(labels, data.train_idx);
  Mat x_te = data.gather_inputs(data.test_idx);
  Mat y_te = data.gather(labels, data.test_idx);

  DenseSurrogate s;
  s.target = target;
  s.in_std = Standardizer::fit(x_tr);
  s.out_std = Standardizer::fit(y_tr);
  Mat xn = s.in_std.apply(x_tr);
  Mat yn = s.out_std.apply(y_tr);

  Rng rng(cfg.seed);
  s.net = MlpNet::glorot(arch.expand(data.dim(), data.outputs()), rng);

  std::vector<Mat*> params;
  for (std::size_t l = 0; l < s.net.weights.size(); ++l) {
    params.push_back(&s.net.weights[l]);
    params.push_back(&s.net.biases[l]);
  }
  AdamState st = AdamState::init(params);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape t;
    TapeNet tn = attach(t, s.net);
    auto pred = tn.apply(t, t.leaf(xn));
    auto loss = t.mean(t.square(t.sub(pred, t.leaf(yn))));
    double lv = t.val(loss)[0];
    if (!std::isfinite(lv))
      throw NumericError("train_dense: non-finite loss at epoch " + std::to_string(epoch));
    t.backward(loss);
    std::vector<const Mat*> grads;
    for (std::size_t l = 0; l < tn.w.size(); ++l) {
      grads.push_back(&t.grad_or_zero(tn.w[l]));
      grads.push_back(&t.grad_or_zero(tn.b[l]));
    }
    adam_step(params, grads, st, cfg, epoch);
  }

  {  // final loss of the returned parameters (standardized space)
    Mat pred = s.net.forward(xn);
    double acc = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      double e = pred[i] - yn[i];
      acc += e * e;
    }
    s.final_train_loss = acc / (double)pred.size();
  }
  s.train_mse = raw_mse(s.predict(x_tr), y_tr);
  s.test_mse = raw_mse(s.predict(x_te), y_te);
  return s;
}

Mat NeurAmModel::predict(const Mat& x) const {
  return out_std.invert(surrogate.forward(encoder.forward(in_std.apply(x))));
}

std::vector<double> NeurAmModel::predict1(const std::vector<double>& x) const {
  Mat m(1, (int)x.size());
  for (std::size_t j = 0; j < x.size(); ++j) m[j] = x[j];
  Mat out = predict(m);
  return std::vector<double>(out.data(), out.data() + out.size());
}

Mat NeurAmModel::encode(const Mat& x_raw) const { return encoder.forward(in_std.apply(x_raw)); }

Mat NeurAmModel::decode_to_raw(const Mat& latent) const {
  return in_std.invert(decoder.forward(latent));
}

std::array<double, 3> NeurAmModel::eval_terms(const Mat& x_raw, const Mat& labels_raw) const {
  Mat xn = in_std.apply(x_raw);
  Mat q = out_std.apply(labels_raw);
  Mat e1 = encoder.forward(xn);
  Mat d1 = decoder.forward(e1);
  Mat e2 = encoder.forward(d1);
  Mat d2 = decoder.forward(e2);
  Mat s1 = surrogate.forward(e1);
  Mat s2 = surrogate.forward(e2);
  auto mse = [](const Mat& a, const Mat& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double e = a[i] - b[i];
      s += e * e;
    }
    return s / (double)a.size();
  };
  return {mse(q, s1), mse(q, s2), mse(d1, d2)};
}

NeurAmModel train_neuram(const Dataset& data, Target target, const TrainConfig& cfg,
                         const NeurAmArch& arch) {
  cfg.validate();
  data.validate();
  Mat labels = labels_for(data, target);
  Mat x_tr = data.gather_inputs(data.train_idx);
  Mat y_tr = data.gather(labels, data.train_idx);
  Mat x_te = data.gather_inputs(data.test_idx);
  Mat y_te = data.gather(labels, data.test_idx);

  NeurAmModel mdl;
  mdl.target = target;
  mdl.latent_dim = data.outputs();
  mdl.in_std = Standardizer::fit(x_tr);
  mdl.out_std = Standardizer::fit(y_tr);
  Mat xn = mdl.in_std.apply(x_tr);
  Mat qn = mdl.out_std.apply(y_tr);

  int d = data.dim(), r = mdl.latent_dim, m = data.outputs();
  Rng rng(cfg.seed);
  mdl.encoder = MlpNet::glorot(arch.autoencoder.expand(d, r), rng);
  mdl.decoder = MlpNet::glorot(arch.autoencoder.expand(r, d), rng);
  mdl.surrogate = MlpNet::glorot(arch.surrogate.expand(r, m), rng);

  std::vector<Mat*> params;
  auto collect = [&](MlpNet& net) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      params.push_back(&net.weights[l]);
      params.push_back(&net.biases[l]);
    }
  };
  collect(mdl.encoder);
  collect(mdl.decoder);
  collect(mdl.surrogate);
  AdamState st = AdamState::init(params);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape t;
    TapeNet te = attach(t, mdl.encoder);
    TapeNet td = attach(t, mdl.decoder);
    TapeNet ts = attach(t, mdl.surrogate);
    auto x = t.leaf(xn);
    auto q = t.leaf(qn);
    auto e1 = te.apply(t, x);
    auto d1 = td.apply(t, e1);
    auto e2 = te.apply(t, d1);
    auto d2 = td.apply(t, e2);
    auto s1 = ts.apply(t, e1);
    auto s2 = ts.apply(t, e2);
    auto term1 = t.mean(t.square(t.sub(q, s1)));
    auto term2 = t.mean(t.square(t.sub(q, s2)));
    auto term3 = t.mean(t.square(t.sub(d1, d2)));
    auto loss = t.add(t.add(term1, term2), term3);
    double lv = t.val(loss)[0];
    if (!std::isfinite(lv))
      throw NumericError("train_neuram: non-finite loss at epoch " + std::to_string(epoch));
    t.backward(loss);
    std::vector<const Mat*> grads;
    auto fetch = [&](const TapeNet& tn) {
      for (std::size_t l = 0; l < tn.w.size(); ++l) {
        grads.push_back(&t.grad_or_zero(tn.w[l]));
        grads.push_back(&t.grad_or_zero(tn.b[l]));
      }
    };
    fetch(te);
    fetch(td);
    fetch(ts);
    adam_step(params, grads, st, cfg, epoch);
  }

  mdl.train_terms = mdl.eval_terms(x_tr, y_tr);
  mdl.final_train_loss = mdl.train_terms[0] + mdl.train_terms[1] + mdl.train_terms[2];
  mdl.test_terms = mdl.eval_terms(x_te, y_te);
  mdl.train_mse = raw_mse(mdl.predict(x_tr), y_tr);
  mdl.test_mse = raw_mse(mdl.predict(x_te), y_te);
  return mdl;
}

double fit_alpha_opt(std::span<const double> hf_vals, std::span<const double> qdagger_vals) {
  if (hf_vals.size() != qdagger_vals.size())
    throw ShapeError("fit_alpha_opt: sample size mismatch");
  std::size_t n = hf_vals.size();
  if (n < 2) throw ConfigError("fit_alpha_opt: need at least 2 samples");
  double mh = 0, mq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mh += hf_vals[i];
    mq += qdagger_vals[i];
  }
  mh /= (double)n;
  mq /= (double)n;
  double cov = 0, var = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dh = hf_vals[i] - mh, dq = qdagger_vals[i] - mq;
    cov += dh * dq;
    var += dq * dq;
  }
  cov /= (double)(n - 1);
  var /= (double)(n - 1);
  if (!(var > 0)) throw NumericError("fit_alpha_opt: degenerate surrogate (zero variance)");
  return cov / var;
}

double scaled_residual_variance(std::span<const double> hf_vals,
                                std::span<const double> qdagger_vals, double alpha) {
  if (hf_vals.size() != qdagger_vals.size())
    throw ShapeError("scaled_residual_variance: sample size mismatch");
  std::size_t n = hf_vals.size();
  if (n < 2) throw ConfigError("scaled_residual_variance: need at least 2 samples");
  double m = 0;
  for (std::size_t i = 0; i < n; ++i) m += hf_vals[i] - alpha * qdagger_vals[i];
  m /= (double)n;
  double v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = hf_vals[i] - alpha * qdagger_vals[i] - m;
    v += r * r;
  }
  return v / (double)(n - 1);
}

namespace {

class DenseModel : public Model {
 public:
  explicit DenseModel(DenseSurrogate s) : s_(std::move(s)) {}
  int input_dim() const override { return s_.net.input_dim(); }
  int output_dim() const override { return s_.net.output_dim(); }
  void eval(const double* x, double* out) const override {
    Mat m(1, input_dim());
    for (int j = 0; j < input_dim(); ++j) m[j] = x[j];
    Mat o = s_.predict(m);
    for (int j = 0; j < output_dim(); ++j) out[j] = o[j];
  }

 private:
  DenseSurrogate s_;
};

class NeurAmAsModel : public Model {
 public:
  explicit NeurAmAsModel(NeurAmModel s) : s_(std::move(s)) {}
  int input_dim() const override { return s_.encoder.input_dim(); }
  int output_dim() const override { return s_.surrogate.output_dim(); }
  void eval(const double* x, double* out) const override {
    Mat m(1, input_dim());
    for (int j = 0; j < input_dim(); ++j) m[j] = x[j];
    Mat o = s_.predict(m);
    for (int j = 0; j < output_dim(); ++j) out[j] = o[j];
  }

 private:
  NeurAmModel s_;
};

class SumModel : public Model {
 public:
  SumModel(std::shared_ptr<const Model> a, std::shared_ptr<const Model> b)
      : a_(std::move(a)), b_(std::move(b)) {
    if (a_->input_dim() != b_->input_dim() || a_->output_dim() != b_->output_dim())
      throw ShapeError("sum_model: operand shape mismatch");
  }
  int input_dim() const override { return a_->input_dim(); }
  int output_dim() const override { return a_->output_dim(); }
  void eval(const double* x, double* out) const override {
    std::vector<double> tmp(output_dim());
    a_->eval(x, out);
    b_->eval(x, tmp.data());
    for (int j = 0; j < output_dim(); ++j) out[j] += tmp[j];
  }

 private:
  std::shared_ptr<const Model> a_, b_;
};

}  // namespace

std::shared_ptr<Model> as_model(DenseSurrogate s) {
  return std::make_shared<DenseModel>(std::move(s));
}
std::shared_ptr<Model> as_model(NeurAmModel s) {
  return std::make_shared<NeurAmAsModel>(std::move(s));
}
std::shared_ptr<Model> sum_model(std::shared_ptr<const Model> a,
                                 std::shared_ptr<const Model> b) {
  return std::make_shared<SumModel>(std::move(a), std::move(b));
}

TuneResult random_search_dense(const Dataset& data, Target target, int trials,
                               std::uint64_t seed, int epochs) {
  if (trials < 1) throw ConfigError("random_search_dense: need at least one trial");
  Rng rng(seed);
  TuneResult best;
  best.test_mse = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = rng.raw();
    LayerSpec arch;
    arch.hidden_layers = 1 + rng.uniform_int(10);
    arch.neurons = 1 + rng.uniform_int(20);
    cfg.learning_rate = std::exp(rng.uniform(std::log(1e-5), std::log(1e-3)));
    cfg.scheduler_step = rng.uniform(0.999, 0.9999);
    DenseSurrogate s = train_dense(data, target, cfg, arch);
    if (s.test_mse < best.test_mse) {
      best.arch = arch;
      best.learning_rate = cfg.learning_rate;
      best.scheduler_step = cfg.scheduler_step;
      best.test_mse = s.test_mse;
    }
  }
  return best;
}

}  // namespace mfb
