#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ond/plants.hpp"

namespace ond {

/// One frequency-response sample x1(jw)/u(jw).
struct FRPoint {
  double omega = 0.0;      // rad/s
  double magnitude = 0.0;  // amplitude ratio (absolute)
  double phase = 0.0;      // rad, unwrapped, negative for lag
};

/// Closed-loop identification run: u = k_id*(r0 - x1) + a*sin(w_i t).
struct IdConfig {
  double k_id = 100.0;
  double r0 = 0.006;   // m, centering setpoint
  double a = 0.3;      // excitation amplitude; rig-specific, no canonical value
  std::vector<double> frequencies;  // rad/s, sorted ascending
  int settle_cycles = 3;
  int measure_cycles = 8;
  double settle_min_time = 1.5;  // s, floor covering the closed-loop transient at high omega
  double dt = 1e-4;

  void validate() const;
};

/// 20 frequencies equidistant on the log scale over [lo, hi].
std::vector<double> log_spaced(double lo, double hi, int n);

/// Per-frequency closed-loop simulation + single-frequency correlation
/// (quadrature demodulation) of x1 against the total control u over an integer
/// number of steady-state cycles.
std::vector<FRPoint> measure_fr(const PlantSpec& plant, const IdConfig& cfg);

struct FitOptions {
  double slope_tolerance = 0.15;  // decades/decade deviation from -1 before exclusion
  bool use_phase = false;         // magnitude-only objective by default
};

struct FitResult {
  double K = 0.0;
  double tau = 0.0;
  std::vector<double> excluded_points;  // omegas dropped by the low-frequency slope rule
  double residual = 0.0;                // sum of squared errors of the fit objective
};

/// Least-squares fit of K/(jw(jw*tau+1)) to FR data in log magnitude, after
/// excluding low-frequency points that violate the -20 dB/dec decrease.
FitResult fit_model(std::vector<FRPoint> points, const FitOptions& opts = {});

/// Two-parameter nominal model, optionally with a pure input delay.
struct NominalModel {
  double K = 0.0463;
  double tau = 0.0076;
  double delay = 0.0;  // s

  double magnitude(double omega) const;
  double phase(double omega) const;  // rad, includes the delay term
};

struct MarginResult {
  double omega_c = 0.0;  // rad/s, unity-gain crossover of gamma*(1 + jw*tau_pd)*FR(jw)
  double margin = 0.0;   // rad, pi + angle(FR) + angle(PD) at omega_c
};

MarginResult crossover_margin(const NominalModel& model, double gamma, double tau_pd);
MarginResult crossover_margin(std::span<const FRPoint> points, double gamma, double tau_pd);

struct TuneResult {
  double gamma = 0.0;
  bool at_boundary = false;  // margin was independent of gamma; gamma_max returned
};

/// Bisection on gamma until the crossover margin reaches the target within 0.5 deg.
TuneResult tune_gamma(const NominalModel& model, double target_margin, double tau_pd,
                      double gamma_max = 1e6);
TuneResult tune_gamma(std::span<const FRPoint> points, double target_margin, double tau_pd,
                      double gamma_max = 1e6);

/// Analytic FR samples of a nominal model (selftest input).
std::vector<FRPoint> synthetic_fr(const NominalModel& model, std::span<const double> omegas);

/// CSV schema: omega,magnitude,phase_deg.
void write_fr_csv(std::span<const FRPoint> points, const std::filesystem::path& path);
std::vector<FRPoint> read_fr_csv(const std::filesystem::path& path);

/// First-harmonic amplitude and phase of a uniformly sampled signal at omega,
/// mean removed first. t0 is the time of samples[0].
struct Harmonic {
  double amplitude = 0.0;
  double phase = 0.0;  // rad
};
Harmonic demodulate(std::span<const double> samples, double dt, double omega, double t0 = 0.0);

}  // namespace ond
