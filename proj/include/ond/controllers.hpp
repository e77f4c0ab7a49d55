#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ond/plants.hpp"

namespace ond {

/// Tracking error coordinates: e1 = x1 - r, e2 = x2 - r_dot.
struct ErrorState {
  double e1 = 0.0;  // m
  double e2 = 0.0;  // m/s
};

/// Gains of the optimal-nonlinear-damping family.
struct OndGains {
  double k = 100.0;   // 1/s^2, output feedback gain
  double mu = 1e-4;   // m, regularization of the damping denominator
  double tau = 0.0;   // s, plant time constant (scaled variant only)
  double Kg = 0.0;    // plant input gain (scaled variant only)

  /// Throws ConfigError on hard violations; returns warnings (e.g. mu not << k).
  std::vector<std::string> validate(bool scaled = false) const;
};

/// One-parameter PD law: gamma is free, tau cancels the plant time constant.
struct PdGains {
  double gamma = 1000.0;  // proportional gain
  double tau = 0.0076;    // s

  void validate() const;
};

/// Unregularized law u = -k*x1 - x2^2 |x1|^-1 sign(x2). Admissible only off the
/// x2-axis; throws SingularityError at x1 = 0 with x2 != 0.
double ond_raw(const State2& state, double k);

/// Regularized law u = -k*e1 - |e2| e2 / (|e1| + mu), defined on all of R^2.
double ond_regularized(const ErrorState& err, const OndGains& g);

/// Scaled law for the lag plant: u = -k*e1 - (tau/Kg) |e2| e2 / (|e1| + mu) + x2/Kg.
/// The trailing term compensates the plant's own viscous damping.
double ond_scaled(const ErrorState& err, double x2, const OndGains& g);

/// u = gamma*(r - x1) - gamma*tau*x2. The D-part uses output velocity, not the
/// error derivative, so step references are admissible.
double pd_control(double r, double x1, double x2, const PdGains& g);

/// Clamp to [-S, S]; identity when S is absent.
double saturate(double u, std::optional<double> S);

/// V = (1/2) k e1^2 + (1/2) e2^2.
double lyapunov_energy(const ErrorState& err, double k);

/// dV/dt = -|e2| e2^2 / (|e1| + mu): non-positive, zero iff e2 = 0.
double lyapunov_rate(const ErrorState& err, double mu);

/// Convergence quadratic form -(3/4) |e2| e2^2 (|e1| + 2mu) / (|e1| + mu)^2.
/// Non-positive everywhere, zero exactly on e2 = 0. Independent of k.
double convergence_form(const ErrorState& err, double k, double mu);

/// x2 + sqrt(k) x1: distance from the slope -sqrt(k) line through the origin.
double attractor_residual(const State2& state, double k);

enum class ControllerType { OndRaw, Ond, OndScaled, Pd };

struct ControllerSpec {
  ControllerType type = ControllerType::Ond;
  OndGains ond;
  PdGains pd;
  std::optional<double> S;  // saturation bound on the commanded value

  std::vector<std::string> validate() const;
};

}  // namespace ond
