#include "ond/signals.hpp"

#include <cmath>
#include <numbers>

#include "ond/errors.hpp"

namespace ond {

namespace {

void check_breakpoints(const std::vector<std::pair<double, double>>& bp) {
  if (bp.empty()) throw ConfigError("piecewise-linear reference needs at least one breakpoint");
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    if (!(bp[i + 1].first > bp[i].first))
      throw ConfigError("piecewise-linear breakpoints must be strictly increasing in time");
  }
  for (const auto& [tb, vb] : bp) {
    if (!std::isfinite(tb) || !std::isfinite(vb))
      throw ConfigError("piecewise-linear breakpoint is not finite");
  }
}

}  // namespace

void ReferenceSpec::validate() const {
  switch (kind) {
    case ReferenceKind::Sinusoid:
      if (!(frequency > 0)) throw ConfigError("sinusoid reference requires frequency > 0");
      break;
    case ReferenceKind::Slope:
      if (!std::isfinite(slope_rate)) throw ConfigError("slope rate must be finite");
      break;
    case ReferenceKind::PiecewiseLinear:
      check_breakpoints(breakpoints);
      break;
    default:
      break;
  }
}

ReferenceSample eval_reference(const ReferenceSpec& spec, double t) {
  switch (spec.kind) {
    case ReferenceKind::Constant:
      return {spec.offset, 0.0};
    case ReferenceKind::Step:
      // The step sits at t = 0; at the discontinuity the post-step value applies.
      return {spec.offset + spec.amplitude, 0.0};
    case ReferenceKind::Slope:
      if (!std::isfinite(spec.slope_rate)) throw ConfigError("slope rate must be finite");
      return {spec.offset + spec.slope_rate * t, spec.slope_rate};
    case ReferenceKind::Sinusoid: {
      if (!(spec.frequency > 0)) throw ConfigError("sinusoid reference requires frequency > 0");
      const double w = spec.frequency;
      return {spec.offset + spec.amplitude * std::sin(w * t),
              spec.amplitude * w * std::cos(w * t)};
    }
    case ReferenceKind::PiecewiseLinear: {
      check_breakpoints(spec.breakpoints);
      const auto& bp = spec.breakpoints;
      if (t <= bp.front().first) return {bp.front().second, 0.0};
      if (t >= bp.back().first) return {bp.back().second, 0.0};
      for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        if (t < bp[i + 1].first) {
          const double slope =
              (bp[i + 1].second - bp[i].second) / (bp[i + 1].first - bp[i].first);
          return {bp[i].second + slope * (t - bp[i].first), slope};
        }
      }
      return {bp.back().second, 0.0};  // unreachable
    }
  }
  throw ConfigError("unknown reference kind");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

double sample_noise(const NoiseSpec& spec, std::uint64_t step_index) {
  if (spec.sensor_std < 0) throw ConfigError("sensor_std must be >= 0");
  if (spec.sensor_std == 0.0) return 0.0;
  // Counter-based stream: O(1) random access, pure in (seed, index).
  const std::uint64_t a = splitmix64(spec.seed ^ splitmix64(step_index + 0x243f6a8885a308d3ull));
  const std::uint64_t b = splitmix64(a);
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;          // [0, 1)
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return spec.sensor_std * z;
}

void JitterSpec::validate() const {
  if (amplitude < 0) throw ConfigError("jitter amplitude must be >= 0");
  if (!(frequency > 0)) throw ConfigError("jitter frequency must be > 0");
}

double eval_jitter(const JitterSpec& spec, double t) {
  if (spec.amplitude == 0.0) return 0.0;
  spec.validate();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double phase = std::fmod(spec.frequency * t, two_pi);
  if (phase < 0) phase += two_pi;
  return phase < std::numbers::pi ? spec.amplitude : -spec.amplitude;
}

}  // namespace ond
