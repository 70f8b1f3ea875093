#include "mfb/priors.hpp"

#include <cmath>
#include <limits>

#include "mfb/errors.hpp"

namespace mfb {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLn10 = 2.302585092994045684017991;
}  // namespace

std::string prior_kind_name(PriorKind k) {
  switch (k) {
    case PriorKind::uniform_box: return "uniform";
    case PriorKind::log_uniform_box: return "log_uniform";
    case PriorKind::truncated_normal: return "truncated_normal";
  }
  return "?";
}

PriorKind prior_kind_from_name(const std::string& s) {
  if (s == "uniform") return PriorKind::uniform_box;
  if (s == "log_uniform") return PriorKind::log_uniform_box;
  if (s == "truncated_normal") return PriorKind::truncated_normal;
  throw ConfigError("unknown prior kind: " + s);
}

PriorSpec PriorSpec::uniform(std::vector<double> lo, std::vector<double> hi) {
  PriorSpec p;
  p.kind = PriorKind::uniform_box;
  p.lo = std::move(lo);
  p.hi = std::move(hi);
  p.validate();
  return p;
}

PriorSpec PriorSpec::log_uniform(std::vector<double> lo, std::vector<double> hi) {
  PriorSpec p;
  p.kind = PriorKind::log_uniform_box;
  p.lo = std::move(lo);
  p.hi = std::move(hi);
  p.validate();
  return p;
}

PriorSpec PriorSpec::truncated_normal(std::vector<double> lo, std::vector<double> hi,
                                      std::vector<double> mean, std::vector<double> sigma,
                                      bool log10_space) {
  PriorSpec p;
  p.kind = PriorKind::truncated_normal;
  p.lo = std::move(lo);
  p.hi = std::move(hi);
  p.mean = std::move(mean);
  p.sigma = std::move(sigma);
  p.log10_space = log10_space;
  p.validate();
  return p;
}

void PriorSpec::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw ConfigError("PriorSpec: bad box");
  for (int j = 0; j < dim(); ++j)
    if (!(hi[j] > lo[j])) throw ConfigError("PriorSpec: bounds must satisfy lo < hi");
  if (kind == PriorKind::log_uniform_box)
    for (double v : lo)
      if (!(v > 0)) throw ConfigError("PriorSpec: log-uniform needs positive bounds");
  if (kind == PriorKind::truncated_normal) {
    if (mean.size() != lo.size() || sigma.size() != lo.size())
      throw ConfigError("PriorSpec: truncated normal needs mean and sigma per dimension");
    for (double s : sigma)
      if (!(s > 0)) throw ConfigError("PriorSpec: sigma must be positive");
    if (log10_space)
      for (double v : lo)
        if (!(v > 0)) throw ConfigError("PriorSpec: log10-space prior needs positive bounds");
  }
}

bool PriorSpec::inside(const double* x) const {
  for (int j = 0; j < dim(); ++j) {
    if (!std::isfinite(x[j])) throw DomainError("PriorSpec: non-finite input");
    if (x[j] < lo[j] || x[j] > hi[j]) return false;
  }
  return true;
}

double PriorSpec::log_density(const double* x) const {
  if (!inside(x)) return kNegInf;
  switch (kind) {
    case PriorKind::uniform_box:
      return 0.0;
    case PriorKind::log_uniform_box: {
      double s = 0.0;
      for (int j = 0; j < dim(); ++j) s -= std::log(x[j]);
      return s;
    }
    case PriorKind::truncated_normal: {
      double s = 0.0;
      for (int j = 0; j < dim(); ++j) {
        double z = log10_space ? (std::log10(x[j]) - std::log10(mean[j])) / sigma[j]
                               : (x[j] - mean[j]) / sigma[j];
        s -= 0.5 * z * z;
      }
      return s;
    }
  }
  return kNegInf;
}

std::vector<double> PriorSpec::sample(Rng& rng) const {
  std::vector<double> x(dim());
  switch (kind) {
    case PriorKind::uniform_box:
      for (int j = 0; j < dim(); ++j) x[j] = rng.uniform(lo[j], hi[j]);
      break;
    case PriorKind::log_uniform_box:
      for (int j = 0; j < dim(); ++j)
        x[j] = std::exp(rng.uniform(std::log(lo[j]), std::log(hi[j])));
      break;
    case PriorKind::truncated_normal:
      for (int j = 0; j < dim(); ++j) {
        // per-dimension rejection inside the box
        for (int tries = 0;; ++tries) {
          double v = log10_space
                         ? std::pow(10.0, rng.normal(std::log10(mean[j]), sigma[j]))
                         : rng.normal(mean[j], sigma[j]);
          if (v >= lo[j] && v <= hi[j]) {
            x[j] = v;
            break;
          }
          if (tries > 100000)
            throw NumericError("PriorSpec: truncated-normal rejection failed (sigma too wide?)");
        }
      }
      break;
  }
  return x;
}

}  // namespace mfb
