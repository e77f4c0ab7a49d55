#pragma once

#include <utility>
#include <variant>
#include <vector>

namespace ond {

/// Motion state: relative displacement and its rate.
struct State2 {
  double x1 = 0.0;  // m
  double x2 = 0.0;  // m/s
};

/// Time derivative of a State2.
struct Deriv2 {
  double dx1 = 0.0;
  double dx2 = 0.0;
};

/// First-order-lag motion plant: tau*x2' + x2 = K*u (plus the free integrator x1' = x2).
struct MotorParams {
  double K = 0.0463;    // steady-state velocity per unit input
  double tau = 0.0076;  // s, dominant time constant (= m/sigma)

  void validate() const;
};

/// Synthetic voice-coil drive: force balance with gravity, position-periodic
/// ripple, Coulomb friction and viscous damping sigma = mass/tau.
struct VoiceCoilParams {
  MotorParams motor;             // overall (K, tau) pairing used by the controllers
  double mass = 0.538;           // kg
  double Ku = 17.16 / 5.23;      // N/V, force constant Psi/R
  double g = 9.8;                // m/s^2
  double ripple_amplitude = 0.0; // N
  double ripple_period = 0.004;  // m
  double coulomb = 0.0;          // N
  double stroke_limit = 0.012;   // m, sensor saturation
  double xi_const = 0.0;         // N, constant matched disturbance

  double sigma() const { return mass / motor.tau; }  // N*s/m, derived viscous damping
  void validate() const;
};

/// Lab drive preset: R = 5.23 Ohm, Psi = 17.16 N/A, m = 0.538 kg, identified
/// (K, tau) = (0.0463, 0.0076). sigma is derived as m/tau (not independently
/// measured). Ripple/Coulomb defaults are sized so the 0.2 V / 450 rad/s jitter
/// overcomes stiction.
VoiceCoilParams voice_coil_lab_preset();

struct DoubleIntegrator {};

using PlantSpec = std::variant<DoubleIntegrator, MotorParams, VoiceCoilParams>;

enum class DisturbanceKind { None, Constant, Pulse, ManualProfile };

/// Bounded matched disturbance profile xi(t).
struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::None;
  double magnitude = 0.0;                               // constant / pulse level
  double t_start = 0.0, t_end = 0.0;                    // pulse window [t_start, t_end)
  std::vector<std::pair<double, double>> profile;       // manual profile, linearly interpolated

  double eval(double t) const;
  void validate() const;
};

/// x1' = x2, x2' = u.
Deriv2 rhs_double_integrator(const State2& state, double u);

/// tau*x2' + x2 = K*(u + xi): the disturbance enters through the control channel,
/// so the closed loop under the scaled damping law settles at x1 = xi/k.
Deriv2 rhs_motor(const State2& state, double u, const MotorParams& p, double xi);

/// Voltage-driven force balance; xi is an extra force in newtons.
Deriv2 rhs_voice_coil(const State2& state, double U, const VoiceCoilParams& p, double xi);

/// Identity measurement (plus sensor noise).
double measure_position(const State2& state, double noise);

/// Voice-coil displacement sensor: clamped to [0, stroke_limit].
double measure_position(const State2& state, const VoiceCoilParams& p, double noise);

}  // namespace ond
