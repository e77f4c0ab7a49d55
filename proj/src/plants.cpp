#include "ond/plants.hpp"

#include <cmath>
#include <numbers>

#include "ond/errors.hpp"

namespace ond {

namespace {

inline double sign0(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

void MotorParams::validate() const {
  if (!(K > 0)) throw ConfigError("motor input gain K must be > 0");
  if (!(tau > 0)) throw ConfigError("motor time constant tau must be > 0");
}

void VoiceCoilParams::validate() const {
  motor.validate();
  if (!(mass > 0)) throw ConfigError("voice-coil mass must be > 0");
  if (!(Ku > 0)) throw ConfigError("voice-coil force constant Ku must be > 0");
  if (!(ripple_period > 0)) throw ConfigError("ripple period must be > 0");
  if (!(stroke_limit > 0)) throw ConfigError("stroke limit must be > 0");
  if (coulomb < 0) throw ConfigError("Coulomb friction must be >= 0");
  if (ripple_amplitude < 0) throw ConfigError("ripple amplitude must be >= 0");
}

VoiceCoilParams voice_coil_lab_preset() {
  VoiceCoilParams p;
  p.motor = MotorParams{0.0463, 0.0076};
  p.mass = 0.538;
  p.Ku = 17.16 / 5.23;
  p.g = 9.8;
  p.ripple_amplitude = 0.25;
  p.ripple_period = 0.004;
  p.coulomb = 0.3;
  p.stroke_limit = 0.012;
  p.xi_const = 0.0;
  return p;
}

void DisturbanceSpec::validate() const {
  if (!std::isfinite(magnitude)) throw ConfigError("disturbance magnitude must be finite");
  if (kind == DisturbanceKind::Pulse && !(t_end > t_start))
    throw ConfigError("disturbance pulse window must satisfy t_end > t_start");
  if (kind == DisturbanceKind::ManualProfile) {
    if (profile.empty()) throw ConfigError("manual disturbance profile is empty");
    for (std::size_t i = 0; i + 1 < profile.size(); ++i)
      if (!(profile[i + 1].first > profile[i].first))
        throw ConfigError("disturbance profile times must be strictly increasing");
    for (const auto& [tp, vp] : profile)
      if (!std::isfinite(tp) || !std::isfinite(vp))
        throw ConfigError("disturbance profile value is not finite");
  }
}

double DisturbanceSpec::eval(double t) const {
  switch (kind) {
    case DisturbanceKind::None:
      return 0.0;
    case DisturbanceKind::Constant:
      return magnitude;
    case DisturbanceKind::Pulse:
      return (t >= t_start && t < t_end) ? magnitude : 0.0;
    case DisturbanceKind::ManualProfile: {
      if (profile.empty()) return 0.0;
      if (t <= profile.front().first) return profile.front().second;
      if (t >= profile.back().first) return profile.back().second;
      for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
        if (t < profile[i + 1].first) {
          const double s = (profile[i + 1].second - profile[i].second) /
                           (profile[i + 1].first - profile[i].first);
          return profile[i].second + s * (t - profile[i].first);
        }
      }
      return profile.back().second;
    }
  }
  return 0.0;
}

Deriv2 rhs_double_integrator(const State2& state, double u) { return {state.x2, u}; }

Deriv2 rhs_motor(const State2& state, double u, const MotorParams& p, double xi) {
  return {state.x2, (p.K * (u + xi) - state.x2) / p.tau};
}

Deriv2 rhs_voice_coil(const State2& state, double U, const VoiceCoilParams& p, double xi) {
  const double ripple =
      p.ripple_amplitude * std::sin(2.0 * std::numbers::pi * state.x1 / p.ripple_period);
  const double force = p.Ku * U - p.mass * p.g - ripple - p.coulomb * sign0(state.x2) +
                       p.xi_const + xi;
  return {state.x2, (force - p.sigma() * state.x2) / p.mass};
}

double measure_position(const State2& state, double noise) { return state.x1 + noise; }

double measure_position(const State2& state, const VoiceCoilParams& p, double noise) {
  const double raw = state.x1 + noise;
  if (raw < 0.0) return 0.0;
  if (raw > p.stroke_limit) return p.stroke_limit;
  return raw;
}

}  // namespace ond
