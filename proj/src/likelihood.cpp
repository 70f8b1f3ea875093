#include "mfb/likelihood.hpp"

#include <cmath>
#include <limits>

#include "mfb/errors.hpp"

namespace mfb {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::A: return "A";
    case Method::B: return "B";
    case Method::C: return "C";
    case Method::D: return "D";
    case Method::E: return "E";
    case Method::F: return "F";
  }
  return "?";
}

Method method_from_name(const std::string& s) {
  if (s.size() == 1) {
    switch (s[0]) {
      case 'A': case 'a': return Method::A;
      case 'B': case 'b': return Method::B;
      case 'C': case 'c': return Method::C;
      case 'D': case 'd': return Method::D;
      case 'E': case 'e': return Method::E;
      case 'F': case 'f': return Method::F;
    }
  }
  throw ConfigError("unknown method: " + s);
}

void NoiseSpec::validate(bool require_positive_variance) const {
  if (variance.empty()) throw ConfigError("NoiseSpec: empty covariance diagonal");
  for (double v : variance) {
    if (v < 0) throw ConfigError("NoiseSpec: variances must be nonnegative");
    if (require_positive_variance && !(v > 0))
      throw ConfigError("NoiseSpec: variances must be strictly positive");
  }
  if (observations.rows() < 1) throw ConfigError("NoiseSpec: need at least one observation");
  if (observations.cols() != outputs())
    throw ShapeError("NoiseSpec: observation dimension does not match the covariance");
}

int Likelihood::input_dim() const {
  if (hf) return hf->input_dim();
  if (surrogate) return surrogate->input_dim();
  if (lf) return lf->input_dim();
  throw ConfigError("Likelihood: no model handles set");
}

void Likelihood::validate() const {
  // method F folds the measurement noise into the learned density and only
  // records the covariance; zero entries are then legal
  noise.validate(method != Method::F);
  auto need = [&](const std::shared_ptr<const Model>& h, const char* what) {
    if (!h)
      throw ConfigError("Likelihood: method " + method_name(method) + " requires " + what);
  };
  switch (method) {
    case Method::A:
      need(hf, "the high-fidelity model");
      break;
    case Method::B:
    case Method::D:
      need(surrogate, "a response surrogate");
      break;
    case Method::C:
    case Method::E:
      need(lf, "the low-fidelity model");
      need(surrogate, "a discrepancy surrogate");
      break;
    case Method::F:
      need(lf, "the low-fidelity model");
      need(surrogate, "a discrepancy surrogate");
      if (!flow) throw ConfigError("Likelihood: method F requires a trained noise density");
      if ((int)alpha.size() != outputs())
        throw ConfigError("Likelihood: method F requires one alpha per output");
      if (flow->dim() != outputs())
        throw ShapeError("Likelihood: flow dimension does not match the outputs");
      break;
  }
  int m = outputs();
  auto check_m = [&](const std::shared_ptr<const Model>& h, const char* what) {
    if (h && h->output_dim() != m)
      throw ShapeError(std::string("Likelihood: ") + what + " output dimension mismatch");
  };
  check_m(hf, "high-fidelity model");
  check_m(lf, "low-fidelity model");
  check_m(surrogate, "surrogate");
}

double Likelihood::log_likelihood(const double* x) const {
  int m = outputs();
  int K = noise.n_obs();
  double mean[16];
  double tmp[16];
  if (m > 16) throw ShapeError("Likelihood: more than 16 outputs unsupported");

  switch (method) {
    case Method::A:
      hf->eval(x, mean);
      break;
    case Method::B:
    case Method::D:
      surrogate->eval(x, mean);
      break;
    case Method::C:
    case Method::E:
      lf->eval(x, mean);
      surrogate->eval(x, tmp);
      for (int j = 0; j < m; ++j) mean[j] += tmp[j];
      break;
    case Method::F: {
      lf->eval(x, mean);
      surrogate->eval(x, tmp);
      for (int j = 0; j < m; ++j) mean[j] = alpha[j] * (mean[j] + tmp[j]);
      double acc = 0.0;
      double resid[16];
      for (int k = 0; k < K; ++k) {
        for (int j = 0; j < m; ++j) resid[j] = noise.observations(k, j) - mean[j];
        acc += flow->log_density(resid);
      }
      return acc;
    }
  }

  // Gaussian likelihood with diagonal covariance (methods A-E)
  double log_norm = -0.5 * m * kLog2Pi;
  for (int j = 0; j < m; ++j) log_norm -= 0.5 * std::log(noise.variance[j]);
  double acc = (double)K * log_norm;
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < m; ++j) {
      double r = noise.observations(k, j) - mean[j];
      acc -= 0.5 * r * r / noise.variance[j];
    }
  }
  return acc;
}

double Likelihood::log_likelihood(const std::vector<double>& x) const {
  if ((int)x.size() != input_dim()) throw ShapeError("Likelihood: input dimension mismatch");
  return log_likelihood(x.data());
}

double Posterior::log_posterior(const double* x) const {
  double lp = prior.log_density(x);
  if (lp == kNegInf) return kNegInf;
  return lp + likelihood.log_likelihood(x);
}

double Posterior::log_posterior(const std::vector<double>& x) const {
  if ((int)x.size() != dim()) throw ShapeError("Posterior: input dimension mismatch");
  return log_posterior(x.data());
}

NoiseSampleSet make_noise_samples(const Mat& hf_vals, const Mat& qdagger_vals,
                                  const std::vector<double>& alpha,
                                  const std::vector<double>& noise_variance, Rng& rng,
                                  const std::string& surrogate_id) {
  if (!hf_vals.same_shape(qdagger_vals))
    throw ShapeError("make_noise_samples: value shape mismatch");
  int m = hf_vals.cols();
  if ((int)alpha.size() != m || (int)noise_variance.size() != m)
    throw ShapeError("make_noise_samples: alpha/variance dimension mismatch");
  NoiseSampleSet s;
  s.alpha_used = alpha;
  s.surrogate_id = surrogate_id;
  s.deltas.resize(hf_vals.rows(), m);
  for (int i = 0; i < hf_vals.rows(); ++i)
    for (int j = 0; j < m; ++j)
      s.deltas(i, j) = hf_vals(i, j) - alpha[j] * qdagger_vals(i, j) +
                       rng.normal(0.0, std::sqrt(noise_variance[j]));
  return s;
}

}  // namespace mfb
