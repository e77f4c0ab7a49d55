#pragma once

#include "ond/errors.hpp"

namespace ond {

/// Second-order sliding-mode differentiator gains. The working coefficients are
/// kappa_n = k_n * rho^(n+1); rho^3 plays the role of the Lipschitz bound on the
/// third derivative of the input.
struct SmdGains {
  double k0 = 3.1;
  double k1 = 3.2;
  double k2 = 1.1;
  double rho = 8.0;

  double kappa0() const { return k0 * rho; }
  double kappa1() const { return k1 * rho * rho; }
  double kappa2() const { return k2 * rho * rho * rho; }
  void validate() const;
};

/// Differentiator state: position, velocity and acceleration estimates.
struct SmdState {
  double y0 = 0.0;  // m
  double y1 = 0.0;  // m/s
  double y2 = 0.0;  // m/s^2
};

/// One explicit-Euler step of
///   y0' = -kappa0 |e|^(2/3) sign(e) + y1
///   y1' = -kappa1 |e|^(1/3) sign(e) + y2
///   y2' = -kappa2 sign(e),            e = y0 - x1_meas, sign(0) = 0.
SmdState smd_step(const SmdState& s, double x1_meas, const SmdGains& g, double dt);

/// Recommended initialization: y0 at the first measurement, rates at zero.
SmdState smd_init(double first_measurement);

/// Backward-difference velocity followed by a discrete second-order Butterworth
/// low-pass (bilinear transform, prewarped cutoff).
struct LpfState {
  double cutoff_hz = 200.0;
  double dt = 1e-4;
  double b0 = 0, b1 = 0, b2 = 0, a1 = 0, a2 = 0;  // biquad coefficients
  double z1 = 0, z2 = 0;                          // filter delay line
  double x_prev = 0;
  bool primed = false;
};

/// Computes the biquad for the given cutoff and rate. Throws ConfigError when the
/// cutoff is at or above Nyquist.
LpfState make_lpf(double cutoff_hz, double dt);

/// Filtered finite-difference velocity estimate. The first call primes the
/// difference and returns 0.
std::pair<LpfState, double> lpf_diff_step(LpfState s, double x1_meas, double dt);

enum class EstimatorType { TrueState, Smd, Lpf };

struct EstimatorSpec {
  EstimatorType type = EstimatorType::TrueState;
  SmdGains smd;
  double cutoff_hz = 200.0;

  void validate(double dt_control) const;
};

/// Per-run velocity estimator instance (single writer; copies are independent).
class VelocityEstimator {
 public:
  VelocityEstimator(const EstimatorSpec& spec, double dt_control);

  /// Feed one measurement sample; returns the velocity estimate. x2_true is
  /// consumed only by the TrueState oracle mode.
  double update(double x1_meas, double x2_true);

  const SmdState& smd_state() const { return smd_; }

 private:
  EstimatorSpec spec_;
  double dt_;
  SmdState smd_{};
  LpfState lpf_{};
  bool primed_ = false;
};

}  // namespace ond
