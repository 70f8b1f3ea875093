#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mfb/model.hpp"

namespace mfb {

/// Pressures are handled in mmHg at the interface and in Barye internally.
constexpr double kMmHgToBarye = 1333.22;

/// Lumped-circuit parameters. Resistances in Barye*s/mL, compliance in
/// mL/Barye, distal pressure in mmHg.
struct WindkesselParams {
  double Rp = 1000.0;
  double Rd = 1000.0;
  double C = 5e-5;
  double Pd_mmHg = 55.0;

  void validate() const;
};

enum class WindkesselKind { rc, rcr };

/// One period of a prescribed inflow (mL/s) with periodic cubic
/// interpolation. The first and last samples define the period; the last
/// flow value must close the cycle (equal the first).
class InflowWaveform {
 public:
  static InflowWaveform from_samples(std::vector<double> t, std::vector<double> q);
  static InflowWaveform from_file(const std::string& path);
  /// The waveform shipped in data/ (abdominal-aortic shape, T=1.07 s).
  static InflowWaveform default_aortic();

  double period() const { return t_.back() - t_.front(); }
  double flow(double time) const;       // periodic in time
  double mean_flow() const;             // exact spline integral / period
  /// Rescale so that mean_flow() == target.
  void set_mean_flow(double target);
  const std::vector<double>& knots_t() const { return t_; }
  const std::vector<double>& knots_q() const { return q_; }

 private:
  void build();
  std::vector<double> t_, q_;
  std::vector<double> m_;  // spline second derivatives at knots
};

/// Min/max/average proximal pressure over the final simulated cycle (mmHg).
struct PressureQoI {
  double p_min = 0, p_max = 0, p_avg = 0;
};

struct SimOptions {
  int cycles = 10;
  double rtol = 1e-8;
  int qoi_samples = 4096;  // uniform samples of the final cycle
};

struct SimResult {
  PressureQoI qoi;
  std::vector<double> time;      // final-cycle sample times (s)
  std::vector<double> pressure;  // proximal pressure at those times (mmHg)
};

/// Integrates the circuit ODE with an adaptive implicit trapezoidal scheme
/// (Newton solve per step) from P=Pd over `cycles` periods; QoIs are taken
/// on the final cycle.
SimResult simulate_windkessel(WindkesselKind kind, const WindkesselParams& p,
                              const InflowWaveform& inflow, const SimOptions& opt = {});

/// Model adapter: x = (Rp, Rd, C) -> (p_min, p_max, p_avg) in mmHg. The RC
/// variant lumps R = Rp + Rd over the shared parameter space.
std::shared_ptr<Model> windkessel_model(WindkesselKind kind, InflowWaveform inflow,
                                        double Pd_mmHg = 55.0, SimOptions opt = {});

struct RlcConstants {
  double R, C, L;
};

/// Poiseuille-flow vessel constants from geometry: R = 8*mu*l/(pi r^4),
/// C = 3*l*pi*r^3/(2 E h), L = rho*l/(pi r^2).
RlcConstants rlc_from_geometry(double mu, double rho, double l, double r, double E, double h);

/// Cuff convention: (1/3) systolic + (2/3) diastolic.
double mean_cuff_pressure(double p_sys, double p_dia);

}  // namespace mfb
