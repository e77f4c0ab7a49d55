#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ond/sim_engine.hpp"
#include "ond/sysid.hpp"

namespace ond {

inline constexpr const char* kVersion = "ondbench 0.1.0";

/// One declared tolerance check of a scenario.
struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioResult {
  std::string name;
  bool ok = false;                       // all checks passed and no run errors
  std::vector<std::string> metrics;      // "key=value" lines
  std::vector<Check> checks;
  std::vector<std::filesystem::path> artifacts;
  std::string error;                     // non-empty when the run itself failed
};

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;  // CLI flag > config file > "out"
  std::optional<std::uint64_t> seed;                // overrides every seeded stream
  std::optional<std::filesystem::path> config;      // JSON config ("custom" scenario + overrides)
};

/// JSON round trip for run descriptions. Parsing allows // comments; unknown keys
/// are rejected with field diagnostics.
std::string sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const std::string& text);

std::vector<std::string> list_scenarios();

/// Runs one registered scenario (or "custom" from the config file) and writes its
/// artifacts under output_dir/<scenario-path>/.
ScenarioResult run_scenario(const std::string& name, const RunOptions& opts);

/// Glob selector over the registry ("figures/*", "experiments/slope-tracking", ...).
/// Writes output_dir/summary.txt; returns a process exit status (0 iff everything
/// passed).
int run_selector(const std::string& selector, const RunOptions& opts);

bool glob_match(const std::string& pattern, const std::string& text);

/// |dV/dt| grid of the regularized damping law, row-major over (e1, e2).
struct EnergyGrid {
  std::vector<double> e1;  // n1 values
  std::vector<double> e2;  // n2 values
  std::vector<double> abs_rate;  // n1*n2 values, index i1*n2 + i2
};
struct GridRanges {
  double e1_min = -0.02, e1_max = 0.02;
  int n1 = 81;
  double e2_min = -0.2, e2_max = 0.2;
  int n2 = 81;
};
EnergyGrid export_energy_landscape(double k, double mu, const GridRanges& grid);
void write_energy_csv(const EnergyGrid& g, const std::filesystem::path& path);

/// Side-by-side estimator comparison on a noisy sinusoidal position signal
/// (shared by the smd-vs-lpf scenario and the verification suite).
struct SmdLpfComparison {
  double convergence_time = -1.0;  // s, measured for the SMD
  double smd_rms = 0.0;            // velocity RMS error after convergence
  double lpf_rms = 0.0;            // baseline RMS error on the same window
  double smd_phase = 0.0;          // rad, estimate phase relative to true velocity
  double lpf_phase = 0.0;
  double peak_velocity = 0.0;
  std::vector<double> t, x_meas, v_true, v_smd, v_lpf;
};
SmdLpfComparison run_smd_vs_lpf(double amplitude, double omega, double noise_std,
                                std::uint64_t seed, double horizon = 12.0, double dt = 1e-4);

/// Voice-coil slope-tracking run description shared by the scenario catalog and
/// the verification suite. controller: "ond" or "pd".
SimConfig slope_tracking_config(const std::string& controller);

}  // namespace ond
