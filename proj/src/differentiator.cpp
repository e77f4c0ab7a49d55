#include "ond/differentiator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ond {

namespace {

inline double sign0(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

void SmdGains::validate() const {
  if (!(k0 > 0 && k1 > 0 && k2 > 0)) throw ConfigError("smd coefficients must be > 0");
  if (!(rho > 0)) throw ConfigError("smd scaling rho must be > 0");
}

SmdState smd_init(double first_measurement) { return {first_measurement, 0.0, 0.0}; }

SmdState smd_step(const SmdState& s, double x1_meas, const SmdGains& g, double dt) {
  if (!(dt > 0)) throw ConfigError("smd step requires dt > 0");
  const double eps = s.y0 - x1_meas;
  const double ae = std::fabs(eps);
  const double sg = sign0(eps);
  const double e23 = std::cbrt(ae * ae);
  const double e13 = std::cbrt(ae);
  return {s.y0 + dt * (-g.kappa0() * e23 * sg + s.y1),
          s.y1 + dt * (-g.kappa1() * e13 * sg + s.y2),
          s.y2 + dt * (-g.kappa2() * sg)};
}

LpfState make_lpf(double cutoff_hz, double dt) {
  if (!(dt > 0)) throw ConfigError("lpf requires dt > 0");
  if (!(cutoff_hz > 0)) throw ConfigError("lpf cutoff must be > 0");
  const double nyquist = 0.5 / dt;
  if (cutoff_hz >= nyquist) {
    std::ostringstream os;
    os << "lpf cutoff " << cutoff_hz << " Hz is at or above Nyquist " << nyquist << " Hz";
    throw ConfigError(os.str());
  }
  LpfState s;
  s.cutoff_hz = cutoff_hz;
  s.dt = dt;
  // Bilinear transform with the cutoff prewarped to land exactly.
  const double wc = 2.0 * std::numbers::pi * cutoff_hz;
  const double Kb = wc / std::tan(wc * dt / 2.0);
  const double k2 = Kb * Kb;
  const double norm = k2 + std::numbers::sqrt2 * wc * Kb + wc * wc;
  s.b0 = wc * wc / norm;
  s.b1 = 2.0 * s.b0;
  s.b2 = s.b0;
  s.a1 = 2.0 * (wc * wc - k2) / norm;
  s.a2 = (k2 - std::numbers::sqrt2 * wc * Kb + wc * wc) / norm;
  return s;
}

std::pair<LpfState, double> lpf_diff_step(LpfState s, double x1_meas, double dt) {
  if (dt != s.dt) throw ConfigError("lpf step dt does not match the configured rate");
  double v_raw = 0.0;
  if (s.primed) v_raw = (x1_meas - s.x_prev) / s.dt;
  s.x_prev = x1_meas;
  s.primed = true;
  // Transposed direct form II biquad.
  const double y = s.b0 * v_raw + s.z1;
  s.z1 = s.b1 * v_raw - s.a1 * y + s.z2;
  s.z2 = s.b2 * v_raw - s.a2 * y;
  return {s, y};
}

void EstimatorSpec::validate(double dt_control) const {
  switch (type) {
    case EstimatorType::TrueState:
      return;
    case EstimatorType::Smd:
      smd.validate();
      return;
    case EstimatorType::Lpf:
      make_lpf(cutoff_hz, dt_control);  // throws on a bad cutoff
      return;
  }
  throw ConfigError("unknown estimator type");
}

VelocityEstimator::VelocityEstimator(const EstimatorSpec& spec, double dt_control)
    : spec_(spec), dt_(dt_control) {
  spec_.validate(dt_control);
  if (spec_.type == EstimatorType::Lpf) lpf_ = make_lpf(spec_.cutoff_hz, dt_control);
}

double VelocityEstimator::update(double x1_meas, double x2_true) {
  switch (spec_.type) {
    case EstimatorType::TrueState:
      return x2_true;
    case EstimatorType::Smd:
      if (!primed_) {
        smd_ = smd_init(x1_meas);
        primed_ = true;
      } else {
        smd_ = smd_step(smd_, x1_meas, spec_.smd, dt_);
      }
      return smd_.y1;
    case EstimatorType::Lpf: {
      auto [next, v] = lpf_diff_step(lpf_, x1_meas, dt_);
      lpf_ = next;
      return v;
    }
  }
  return x2_true;
}

}  // namespace ond
