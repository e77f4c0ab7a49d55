#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ond/controllers.hpp"
#include "ond/differentiator.hpp"
#include "ond/errors.hpp"
#include "ond/plants.hpp"
#include "ond/signals.hpp"

namespace ond {

enum class IntegratorKind { Euler, Rk4 };

/// Fixed-step closed-loop run description. The controller is sampled every
/// dt_control (zero-order hold in between); the plant is integrated at dt_plant.
struct SimConfig {
  double dt_plant = 1e-5;
  double dt_control = 1e-4;  // 10 kHz board rate
  double horizon = 1.0;
  IntegratorKind integrator = IntegratorKind::Rk4;
  State2 initial;
  PlantSpec plant = DoubleIntegrator{};
  ControllerSpec controller;
  EstimatorSpec estimator;
  ReferenceSpec reference;
  DisturbanceSpec disturbance;
  NoiseSpec noise;
  JitterSpec jitter{0.0, 450.0};  // applied to voice-coil runs only
  int record_stride = 1;          // record every n-th control sample

  void validate() const;
};

/// Time-indexed record of everything a scenario plots or checks. Diagnostics
/// (e1, e2, V, V_rate, attractor_residual) are computed from the true state at
/// control instants; the controller itself sees x1_meas and v_est.
struct SimTrace {
  std::vector<double> t, r, r_dot, x1_true, x2_true, x1_meas, v_est, e1, e2, u_raw, u_applied,
      xi, V, V_rate, attractor_residual;

  static constexpr const char* kCsvHeader =
      "t,r,r_dot,x1_true,x2_true,x1_meas,v_est,e1,e2,u_raw,u_applied,xi,V,V_rate,"
      "attractor_residual";

  std::size_t size() const { return t.size(); }
};

/// Run aborted on a non-finite state; carries whatever was recorded up to the
/// failure for diagnostics.
class SimulationAborted : public std::runtime_error {
 public:
  SimulationAborted(const std::string& what, SimTrace partial_trace)
      : std::runtime_error(what), partial(std::move(partial_trace)) {}
  SimTrace partial;
};

SimTrace run_closed_loop(const SimConfig& cfg);

/// Paired double-integrator comparison of the regularized nonlinear-damping loop
/// against the critically damped PD loop from the same initial state.
struct ConvergenceReport {
  double t_first_below = -1.0;      // first time OND |x1| < PD |x1|
  double t_dominance_lost = -1.0;   // first later time OND |x1| >= PD |x1| (PD above floor)
  double t_pd_floor = -1.0;         // first time PD |x1| < floor
  double floor = 1e-12;
  bool dominant_to_floor = false;
};

struct ConvergencePair {
  SimTrace ond;
  SimTrace pd;
  std::vector<double> t;           // shared sample times
  std::vector<double> log10_ond;   // log10 |x1|, censored at the floor
  std::vector<double> log10_pd;
  ConvergenceReport report;
};

/// Requires the PD pair to be critically damped: pd_tau = 2/sqrt(k).
ConvergencePair run_convergence_benchmark(double k, double mu, double pd_tau, State2 x0,
                                          double horizon);

struct SteadyStateOptions {
  double horizon = 60.0;
  double dt = 1e-4;
  double mu = 1e-4;
  double settle_velocity = 1e-3;  // m/s, |x2| bound held over the hold window
  double hold = 0.5;              // s
};

struct SteadyStateResult {
  double x1_terminal = 0.0;  // mean x1 over the settled hold window
  double settle_time = 0.0;
};

/// Constant matched disturbance on the lag motor under the scaled damping law;
/// returns the settled x1 (expected xi/k). Throws TimeoutError when |x2| never
/// stays below settle_velocity for a full hold window.
SteadyStateResult run_disturbance_steady_state(double k, double xi, const MotorParams& plant,
                                               const SteadyStateOptions& opts = {});

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path);

}  // namespace ond
