#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ond {

enum class ReferenceKind { Constant, Step, Slope, PiecewiseLinear, Sinusoid };

/// Reference trajectory description. Only the fields relevant to `kind` are read.
struct ReferenceSpec {
  ReferenceKind kind = ReferenceKind::Constant;
  double amplitude = 0.0;   // m (step, sinusoid)
  double frequency = 0.0;   // rad/s (sinusoid)
  double slope_rate = 0.0;  // m/s (slope)
  double offset = 0.0;      // m
  std::vector<std::pair<double, double>> breakpoints;  // (t [s], value [m]), strictly increasing t

  void validate() const;
};

struct ReferenceSample {
  double r;      // m
  double r_dot;  // m/s
};

/// r(t) and its analytic derivative. Steps report r_dot = 0 everywhere (the PD law
/// consumes output velocity, not the error derivative, so discontinuous references
/// are admissible). Piecewise-linear holds the end values outside the breakpoints.
ReferenceSample eval_reference(const ReferenceSpec& spec, double t);

/// Deterministic Gaussian measurement-noise stream.
struct NoiseSpec {
  double sensor_std = 0.0;  // m
  std::uint64_t seed = 0;
};

/// Pure function of (seed, index): the same pair always yields the same sample.
double sample_noise(const NoiseSpec& spec, std::uint64_t step_index);

/// Square-wave dither used to overcome magnetic stiction of the voice-coil drive.
struct JitterSpec {
  double amplitude = 0.0;    // V
  double frequency = 450.0;  // rad/s

  void validate() const;
};

/// +amplitude on the first half-period, -amplitude on the second (50% duty).
double eval_jitter(const JitterSpec& spec, double t);

}  // namespace ond
