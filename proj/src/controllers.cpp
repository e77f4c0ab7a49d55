#include "ond/controllers.hpp"

#include <cmath>
#include <sstream>

#include "ond/errors.hpp"

namespace ond {

namespace {

inline double sign0(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

std::vector<std::string> OndGains::validate(bool scaled) const {
  if (!(k > 0)) throw ConfigError("ond gain k must be > 0");
  if (!(mu > 0)) throw ConfigError("ond regularization mu must be > 0");
  if (scaled) {
    if (!(tau > 0)) throw ConfigError("scaled ond variant requires tau > 0");
    if (!(Kg > 0)) throw ConfigError("scaled ond variant requires input gain Kg > 0");
  }
  std::vector<std::string> warnings;
  if (!(mu < k * 1e-2)) {
    std::ostringstream os;
    os << "mu = " << mu << " is not small against k = " << k << " (expected mu << k)";
    warnings.push_back(os.str());
  }
  return warnings;
}

void PdGains::validate() const {
  if (!(gamma > 0)) throw ConfigError("pd gain gamma must be > 0");
  if (!(tau > 0)) throw ConfigError("pd time constant tau must be > 0");
}

std::vector<std::string> ControllerSpec::validate() const {
  if (S && !(*S > 0)) throw ConfigError("saturation bound S must be > 0 when set");
  switch (type) {
    case ControllerType::OndRaw:
      if (!(ond.k > 0)) throw ConfigError("ond gain k must be > 0");
      return {};
    case ControllerType::Ond:
      return ond.validate(false);
    case ControllerType::OndScaled:
      return ond.validate(true);
    case ControllerType::Pd:
      pd.validate();
      return {};
  }
  throw ConfigError("unknown controller type");
}

double ond_raw(const State2& state, double k) {
  if (state.x1 == 0.0) {
    if (state.x2 == 0.0) return 0.0;  // equilibrium
    std::ostringstream os;
    os << "ond_raw is singular at x1 = 0 with x2 = " << state.x2
       << " (admissible states exclude the x2-axis)";
    throw SingularityError(os.str());
  }
  return -k * state.x1 - state.x2 * state.x2 / std::fabs(state.x1) * sign0(state.x2);
}

double ond_regularized(const ErrorState& err, const OndGains& g) {
  return -g.k * err.e1 - std::fabs(err.e2) * err.e2 / (std::fabs(err.e1) + g.mu);
}

double ond_scaled(const ErrorState& err, double x2, const OndGains& g) {
  const double damping = (g.tau / g.Kg) * std::fabs(err.e2) * err.e2 / (std::fabs(err.e1) + g.mu);
  return -g.k * err.e1 - damping + x2 / g.Kg;
}

double pd_control(double r, double x1, double x2, const PdGains& g) {
  return g.gamma * (r - x1) - g.gamma * g.tau * x2;
}

double saturate(double u, std::optional<double> S) {
  if (!S) return u;
  if (u > *S) return *S;
  if (u < -*S) return -*S;
  return u;
}

double lyapunov_energy(const ErrorState& err, double k) {
  return 0.5 * k * err.e1 * err.e1 + 0.5 * err.e2 * err.e2;
}

double lyapunov_rate(const ErrorState& err, double mu) {
  return -std::fabs(err.e2) * err.e2 * err.e2 / (std::fabs(err.e1) + mu);
}

double convergence_form(const ErrorState& err, double k, double mu) {
  (void)k;  // the closed form of the quadratic form does not depend on k
  const double denom = std::fabs(err.e1) + mu;
  return -0.75 * std::fabs(err.e2) * err.e2 * err.e2 * (std::fabs(err.e1) + 2.0 * mu) /
         (denom * denom);
}

double attractor_residual(const State2& state, double k) {
  return state.x2 + std::sqrt(k) * state.x1;
}

}  // namespace ond
