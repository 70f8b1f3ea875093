#include "mfb/windkessel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mfb/errors.hpp"

namespace mfb {

void WindkesselParams::validate() const {
  if (!(Rp > 0) || !(Rd > 0) || !(C > 0) || !(Pd_mmHg > 0))
    throw ConfigError("WindkesselParams: all parameters must be strictly positive");
}

namespace {

/// Thomas solve of a tridiagonal system (a: sub, b: diag, c: super).
std::vector<double> tridiag_solve(std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c, std::vector<double> d) {
  int n = (int)b.size();
  for (int i = 1; i < n; ++i) {
    double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

/// Cyclic tridiagonal solve via Sherman-Morrison (corner entries alpha =
/// A[n-1][0], beta = A[0][n-1]).
std::vector<double> cyclic_solve(const std::vector<double>& a, std::vector<double> b,
                                 const std::vector<double>& c, const std::vector<double>& d,
                                 double alpha, double beta) {
  int n = (int)b.size();
  double gamma = -b[0];
  b[0] -= gamma;
  b[n - 1] -= alpha * beta / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  auto x = tridiag_solve(a, b, c, d);
  auto z = tridiag_solve(a, b, c, u);
  double vx = x[0] + beta / gamma * x[n - 1];
  double vz = z[0] + beta / gamma * z[n - 1];
  double f = vx / (1.0 + vz);
  for (int i = 0; i < n; ++i) x[i] -= f * z[i];
  return x;
}

}  // namespace

InflowWaveform InflowWaveform::from_samples(std::vector<double> t, std::vector<double> q) {
  if (t.size() != q.size() || t.size() < 4)
    throw ConfigError("InflowWaveform: need at least 4 (time, flow) samples");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw ConfigError("InflowWaveform: times must increase strictly");
  double scale = std::max(std::fabs(q.front()), 1.0);
  if (std::fabs(q.back() - q.front()) > 1e-9 * scale)
    throw ConfigError("InflowWaveform: first and last flow samples must close the period");
  q.back() = q.front();
  InflowWaveform w;
  w.t_ = std::move(t);
  w.q_ = std::move(q);
  w.build();
  return w;
}

void InflowWaveform::build() {
  int n = (int)t_.size() - 1;  // intervals; unknown M_0..M_{n-1}, M_n = M_0
  std::vector<double> h(n);
  for (int i = 0; i < n; ++i) h[i] = t_[i + 1] - t_[i];
  auto hm = [&](int i) { return h[(i - 1 + n) % n]; };
  auto qq = [&](int i) { return q_[(i % n + n) % n]; };
  std::vector<double> a(n), b(n), c(n), d(n);
  for (int i = 0; i < n; ++i) {
    a[i] = hm(i) / 6.0;
    b[i] = (hm(i) + h[i]) / 3.0;
    c[i] = h[i] / 6.0;
    d[i] = (qq(i + 1) - qq(i)) / h[i] - (qq(i) - qq(i - 1)) / hm(i);
  }
  std::vector<double> m;
  if (n == 1) {
    m = {0.0};
  } else if (n == 2) {
    // dense 2x2 with both off-diagonal couplings merged
    double b0 = b[0], b1 = b[1];
    double o01 = c[0] + a[0], o10 = a[1] + c[1];
    double det = b0 * b1 - o01 * o10;
    m = {(d[0] * b1 - o01 * d[1]) / det, (b0 * d[1] - o10 * d[0]) / det};
  } else {
    m = cyclic_solve(a, b, c, d, a[0], c[n - 1]);
  }
  m_.assign(n + 1, 0.0);
  for (int i = 0; i < n; ++i) m_[i] = m[i];
  m_[n] = m[0];
}

double InflowWaveform::flow(double time) const {
  double T = period();
  double u = std::fmod(time - t_.front(), T);
  if (u < 0) u += T;
  u += t_.front();
  int i = (int)(std::upper_bound(t_.begin(), t_.end(), u) - t_.begin()) - 1;
  i = std::clamp(i, 0, (int)t_.size() - 2);
  double h = t_[i + 1] - t_[i];
  double A = (t_[i + 1] - u) / h, B = (u - t_[i]) / h;
  return A * q_[i] + B * q_[i + 1] +
         ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double InflowWaveform::mean_flow() const {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
    double h = t_[i + 1] - t_[i];
    s += h / 2.0 * (q_[i] + q_[i + 1]) - h * h * h / 24.0 * (m_[i] + m_[i + 1]);
  }
  return s / period();
}

void InflowWaveform::set_mean_flow(double target) {
  double cur = mean_flow();
  if (std::fabs(cur) < 1e-12) throw ConfigError("InflowWaveform: mean flow is zero, cannot rescale");
  double f = target / cur;
  for (auto& v : q_) v *= f;
  build();
}

InflowWaveform InflowWaveform::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("InflowWaveform: cannot open " + path);
  std::vector<double> t, q;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    double ti, qi;
    if (ls >> ti >> qi) {
      t.push_back(ti);
      q.push_back(qi);
    }
  }
  return from_samples(std::move(t), std::move(q));
}

InflowWaveform InflowWaveform::default_aortic() {
  return from_file(std::string(MFB_DATA_DIR) + "/inflow_aortic.csv");
}

namespace {

struct Circuit {
  double Rx;  // distal resistance seen by the capacitor
  double C;
  double Pd;  // Barye
  const InflowWaveform* inflow;

  double f(double t, double P) const {
    return (inflow->flow(t) - (P - Pd) / Rx) / C;
  }

  double step(double t0, double P0, double h) const {
    double f0 = f(t0, P0);
    double P1 = P0 + h * f0;  // predictor
    double dg = 1.0 + h / (2.0 * Rx * C);
    for (int it = 0; it < 50; ++it) {
      double g = P1 - P0 - h / 2.0 * (f0 + f(t0 + h, P1));
      double delta = g / dg;
      P1 -= delta;
      if (std::fabs(delta) <= 1e-13 * std::max(1.0, std::fabs(P1))) return P1;
    }
    throw NumericError("windkessel: implicit step failed to converge at t = " +
                       std::to_string(t0));
  }
};

}  // namespace

SimResult simulate_windkessel(WindkesselKind kind, const WindkesselParams& p,
                              const InflowWaveform& inflow, const SimOptions& opt) {
  p.validate();
  if (opt.cycles < 2) throw ConfigError("simulate_windkessel: need at least 2 cycles");
  double T = inflow.period();
  Circuit c;
  c.Rx = kind == WindkesselKind::rcr ? p.Rd : p.Rp + p.Rd;
  c.C = p.C;
  c.Pd = p.Pd_mmHg * kMmHgToBarye;
  c.inflow = &inflow;

  double t = 0.0;
  double P = c.Pd;  // state: P_c (rcr) or P_p (rc)
  double h = T / 200.0;
  double t_qoi = (opt.cycles - 1) * T;

  auto advance_to = [&](double t_end) {
    while (t < t_end) {
      double hs = std::min(h, t_end - t);
      bool last = hs >= t_end - t - 1e-15 * t_end;
      for (;;) {
        double Pf = c.step(t, P, hs);
        double Pm = c.step(t, P, hs / 2.0);
        double Ph = c.step(t + hs / 2.0, Pm, hs / 2.0);
        double err = std::fabs(Ph - Pf) / 3.0;
        double tol = opt.rtol * std::max(std::fabs(Ph), kMmHgToBarye);
        if (err <= tol) {
          t += hs;
          P = Ph;
          double grow = err > 0 ? 0.9 * std::cbrt(tol / err) : 5.0;
          h = hs * std::clamp(grow, 0.2, 5.0);
          break;
        }
        hs *= std::clamp(0.9 * std::cbrt(tol / err), 0.2, 0.9);
        last = false;
      }
      if (last) break;
    }
    t = t_end;
  };

  advance_to(t_qoi);

  SimResult res;
  int S = opt.qoi_samples;
  res.time.resize(S + 1);
  res.pressure.resize(S + 1);
  for (int j = 0; j <= S; ++j) {
    double tj = t_qoi + (double)j * T / S;
    if (j > 0) advance_to(tj);
    double Pp = kind == WindkesselKind::rcr ? P + p.Rp * inflow.flow(tj) : P;
    res.time[j] = tj;
    res.pressure[j] = Pp / kMmHgToBarye;
  }

  double pmin = res.pressure[0], pmax = res.pressure[0], integ = 0.0;
  for (int j = 0; j <= S; ++j) {
    pmin = std::min(pmin, res.pressure[j]);
    pmax = std::max(pmax, res.pressure[j]);
  }
  for (int j = 0; j < S; ++j) integ += 0.5 * (res.pressure[j] + res.pressure[j + 1]) * (T / S);
  res.qoi.p_min = pmin;
  res.qoi.p_max = pmax;
  res.qoi.p_avg = integ / T;
  return res;
}

namespace {

class WindkesselModel : public Model {
 public:
  WindkesselModel(WindkesselKind kind, InflowWaveform inflow, double Pd, SimOptions opt)
      : kind_(kind), inflow_(std::move(inflow)), pd_(Pd), opt_(opt) {}
  int input_dim() const override { return 3; }
  int output_dim() const override { return 3; }
  void eval(const double* x, double* out) const override {
    WindkesselParams p;
    p.Rp = x[0];
    p.Rd = x[1];
    p.C = x[2];
    p.Pd_mmHg = pd_;
    SimResult r = simulate_windkessel(kind_, p, inflow_, opt_);
    out[0] = r.qoi.p_min;
    out[1] = r.qoi.p_max;
    out[2] = r.qoi.p_avg;
  }

 private:
  WindkesselKind kind_;
  InflowWaveform inflow_;
  double pd_;
  SimOptions opt_;
};

}  // namespace

std::shared_ptr<Model> windkessel_model(WindkesselKind kind, InflowWaveform inflow, double Pd_mmHg,
                                        SimOptions opt) {
  return std::make_shared<WindkesselModel>(kind, std::move(inflow), Pd_mmHg, opt);
}

RlcConstants rlc_from_geometry(double mu, double rho, double l, double r, double E, double h) {
  if (!(mu > 0) || !(rho > 0) || !(l > 0) || !(r > 0) || !(E > 0) || !(h > 0))
    throw DomainError("rlc_from_geometry: all inputs must be positive");
  constexpr double kPi = 3.141592653589793238462643383279502884;
  RlcConstants k;
  k.R = 8.0 * mu * l / (kPi * r * r * r * r);
  k.C = 3.0 * l * kPi * r * r * r / (2.0 * E * h);
  k.L = rho * l / (kPi * r * r);
  return k;
}

double mean_cuff_pressure(double p_sys, double p_dia) {
  if (p_sys < p_dia) throw DomainError("mean_cuff_pressure: systolic below diastolic");
  return p_sys / 3.0 + 2.0 * p_dia / 3.0;
}

}  // namespace mfb
