#include "ond/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ond/errors.hpp"
#include "ond/sim_engine.hpp"

namespace ond {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Deriv2 id_rhs(const PlantSpec& plant, const State2& s, double u) {
  return std::visit(overloaded{
                        [&](const DoubleIntegrator&) { return rhs_double_integrator(s, u); },
                        [&](const MotorParams& p) { return rhs_motor(s, u, p, 0.0); },
                        [&](const VoiceCoilParams& p) {
                          // Gravity-compensated drive; ripple/Coulomb stay active.
                          const double U = u + p.mass * p.g / p.Ku;
                          return rhs_voice_coil(s, U, p, 0.0);
                        },
                    },
                    plant);
}

State2 id_step(const PlantSpec& plant, const State2& s, double h, double u) {
  const Deriv2 k1 = id_rhs(plant, s, u);
  const Deriv2 k2 = id_rhs(plant, {s.x1 + 0.5 * h * k1.dx1, s.x2 + 0.5 * h * k1.dx2}, u);
  const Deriv2 k3 = id_rhs(plant, {s.x1 + 0.5 * h * k2.dx1, s.x2 + 0.5 * h * k2.dx2}, u);
  const Deriv2 k4 = id_rhs(plant, {s.x1 + h * k3.dx1, s.x2 + h * k3.dx2}, u);
  return {s.x1 + h / 6.0 * (k1.dx1 + 2 * k2.dx1 + 2 * k3.dx1 + k4.dx1),
          s.x2 + h / 6.0 * (k1.dx2 + 2 * k2.dx2 + 2 * k3.dx2 + k4.dx2)};
}

}  // namespace

void IdConfig::validate() const {
  if (!(k_id > 0)) throw ConfigError("identification gain k_id must be > 0");
  if (!(dt > 0)) throw ConfigError("identification dt must be > 0");
  if (a < 0) throw ConfigError("excitation amplitude must be >= 0");
  if (settle_cycles < 1) throw ConfigError("settle_cycles must be >= 1");
  if (settle_min_time < 0) throw ConfigError("settle_min_time must be >= 0");
  if (measure_cycles < 1) throw ConfigError("measure window shorter than one period");
  if (frequencies.empty()) throw ConfigError("identification needs at least one frequency");
  double prev = 0.0;
  for (double w : frequencies) {
    if (!(w > prev)) throw ConfigError("frequencies must be positive and sorted ascending");
    if (w * dt > 0.5) throw ConfigError("frequency too high for the sampling rate");
    prev = w;
  }
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw ConfigError("log_spaced needs 0 < lo < hi, n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return out;
}

Harmonic demodulate(std::span<const double> samples, double dt, double omega, double t0) {
  if (samples.size() < 4) throw ConfigError("demodulation window too short");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    const double x = samples[i] - mean;
    ss += x * std::sin(omega * t);
    cs += x * std::cos(omega * t);
  }
  const double a_s = 2.0 * ss / static_cast<double>(samples.size());
  const double a_c = 2.0 * cs / static_cast<double>(samples.size());
  return {std::hypot(a_s, a_c), std::atan2(a_c, a_s)};
}

std::vector<FRPoint> measure_fr(const PlantSpec& plant, const IdConfig& cfg) {
  cfg.validate();
  std::visit([](const auto& p) {
    if constexpr (!std::is_same_v<std::decay_t<decltype(p)>, DoubleIntegrator>) p.validate();
  }, plant);

  const double bound = 100.0 * (std::fabs(cfg.r0) + cfg.a + 0.01);
  std::vector<FRPoint> points;
  points.reserve(cfg.frequencies.size());
  double prev_phase = 0.0;
  bool have_prev = false;

  // TODO: per-frequency runs are independent; thread the sweep if it ever gets slow.
  for (double w : cfg.frequencies) {
    const double period = 2.0 * kPi / w;
    const double settle_time = std::max(cfg.settle_cycles * period, cfg.settle_min_time);
    const long n_settle = std::lround(std::ceil(settle_time / period) * period / cfg.dt);
    const long n_meas = std::max<long>(4, std::lround(cfg.measure_cycles * period / cfg.dt));

    State2 s{cfg.r0, 0.0};
    std::vector<double> xs, us;
    xs.reserve(static_cast<std::size_t>(n_meas));
    us.reserve(static_cast<std::size_t>(n_meas));
    for (long i = 0; i < n_settle + n_meas; ++i) {
      const double t = static_cast<double>(i) * cfg.dt;
      const double u = cfg.k_id * (cfg.r0 - s.x1) + cfg.a * std::sin(w * t);
      if (i >= n_settle) {
        xs.push_back(s.x1);
        us.push_back(u);
      }
      s = id_step(plant, s, cfg.dt, u);
      if (!std::isfinite(s.x1) || std::fabs(s.x1) > bound) {
        std::ostringstream os;
        os << "identification loop output unbounded at omega = " << w << " rad/s";
        throw InstabilityError(os.str());
      }
    }
    const double t0 = static_cast<double>(n_settle) * cfg.dt;
    const Harmonic hx = demodulate(xs, cfg.dt, w, t0);
    const Harmonic hu = demodulate(us, cfg.dt, w, t0);
    if (!(hu.amplitude > 0)) throw InstabilityError("no excitation content in the control signal");

    // The plant is driven by the held staircase, not the sampled sequence: its
    // fundamental lags by half a sample and is attenuated by sinc(w*dt/2).
    // Remove that known hold response from the measured ratio.
    const double half = 0.5 * w * cfg.dt;
    const double hold_gain = std::sin(half) / half;
    double phase = std::remainder(hx.phase - hu.phase + half, 2.0 * kPi);
    if (phase > 1e-6) phase -= 2.0 * kPi;  // these plants always lag
    if (have_prev) {
      while (phase - prev_phase > kPi) phase -= 2.0 * kPi;
      while (phase - prev_phase < -kPi) phase += 2.0 * kPi;
    }
    prev_phase = phase;
    have_prev = true;
    points.push_back({w, hx.amplitude / hu.amplitude / hold_gain, phase});
  }
  return points;
}

namespace {

struct LogMagFit {
  double logK = 0.0;
  double loss = 0.0;
};

LogMagFit fit_at_tau(const std::vector<FRPoint>& pts, std::size_t first, double tau,
                     const FitOptions& opts) {
  double acc = 0.0;
  const std::size_t n = pts.size() - first;
  for (std::size_t i = first; i < pts.size(); ++i) {
    const double w = pts[i].omega;
    acc += std::log(pts[i].magnitude) + std::log(w) + 0.5 * std::log1p(w * w * tau * tau);
  }
  LogMagFit out;
  out.logK = acc / static_cast<double>(n);
  for (std::size_t i = first; i < pts.size(); ++i) {
    const double w = pts[i].omega;
    const double model = out.logK - std::log(w) - 0.5 * std::log1p(w * w * tau * tau);
    const double d = std::log(pts[i].magnitude) - model;
    out.loss += d * d;
    if (opts.use_phase) {
      const double pd = pts[i].phase - (-kPi / 2.0 - std::atan(w * tau));
      out.loss += pd * pd;
    }
  }
  return out;
}

}  // namespace

FitResult fit_model(std::vector<FRPoint> points, const FitOptions& opts) {
  std::sort(points.begin(), points.end(),
            [](const FRPoint& a, const FRPoint& b) { return a.omega < b.omega; });
  if (points.size() < 4) throw ConfigError("model fit needs at least 4 FR points");
  for (const auto& p : points)
    if (!(p.omega > 0) || !(p.magnitude > 0))
      throw ConfigError("FR points must have positive omega and magnitude");
  if (std::log10(points.back().omega / points.front().omega) < 1.0)
    throw ConfigError("model fit needs FR data spanning at least one decade");

  // Drop low-frequency points that violate the -20 dB/dec decrease of the free
  // integrator (local log-log slope off -1 by more than the tolerance).
  std::size_t first = 0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double slope = (std::log10(points[i + 1].magnitude) - std::log10(points[i].magnitude)) /
                         (std::log10(points[i + 1].omega) - std::log10(points[i].omega));
    if (std::fabs(slope + 1.0) > opts.slope_tolerance)
      first = i + 1;
    else
      break;
  }
  if (points.size() - first < 3)
    throw ConfigError("degenerate FR data: the slope rule excluded almost every point");

  // 1-D search over tau (K is closed-form at fixed tau): coarse log grid, then
  // golden-section polish on the bracketing interval.
  double best_tau = 1e-6, best_loss = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 240;
  for (int i = 0; i <= kGrid; ++i) {
    const double tau = std::pow(10.0, -7.0 + 8.0 * static_cast<double>(i) / kGrid);
    const double loss = fit_at_tau(points, first, tau, opts).loss;
    if (loss < best_loss) {
      best_loss = loss;
      best_tau = tau;
    }
  }
  double lo = best_tau / std::pow(10.0, 8.0 / kGrid);
  double hi = best_tau * std::pow(10.0, 8.0 / kGrid);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo), b = std::log(hi);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = fit_at_tau(points, first, std::exp(c), opts).loss;
  double fd = fit_at_tau(points, first, std::exp(d), opts).loss;
  for (int it = 0; it < 120; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = fit_at_tau(points, first, std::exp(c), opts).loss;
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = fit_at_tau(points, first, std::exp(d), opts).loss;
    }
  }
  best_tau = std::exp(0.5 * (a + b));
  const LogMagFit fit = fit_at_tau(points, first, best_tau, opts);

  FitResult out;
  out.K = std::exp(fit.logK);
  out.tau = best_tau;
  out.residual = fit.loss;
  for (std::size_t i = 0; i < first; ++i) out.excluded_points.push_back(points[i].omega);
  return out;
}

double NominalModel::magnitude(double omega) const {
  return K / (omega * std::sqrt(1.0 + omega * omega * tau * tau));
}

double NominalModel::phase(double omega) const {
  return -kPi / 2.0 - std::atan(omega * tau) - omega * delay;
}

MarginResult crossover_margin(const NominalModel& model, double gamma, double tau_pd) {
  if (!(gamma > 0)) throw ConfigError("crossover requires gamma > 0");
  if (!(model.K > 0) || !(model.tau > 0)) throw ConfigError("invalid nominal model");
  // |L(jw)| = gamma*sqrt(1+(w*tau_pd)^2)*|FR(jw)| is strictly decreasing in w.
  auto log_gain = [&](double w) {
    return std::log(gamma) + 0.5 * std::log1p(w * w * tau_pd * tau_pd) +
           std::log(model.magnitude(w));
  };
  double lo = 1e-9, hi = 1e12;
  if (log_gain(lo) < 0.0 || log_gain(hi) > 0.0)
    throw OutOfRangeError("open loop has no unity-gain crossing in the model range");
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    (log_gain(mid) > 0.0 ? lo : hi) = mid;
  }
  const double wc = std::sqrt(lo * hi);
  const double margin = kPi + model.phase(wc) + std::atan(wc * tau_pd);
  return {wc, margin};
}

MarginResult crossover_margin(std::span<const FRPoint> points, double gamma, double tau_pd) {
  if (!(gamma > 0)) throw ConfigError("crossover requires gamma > 0");
  if (points.size() < 2) throw ConfigError("crossover needs at least two FR points");
  std::vector<double> lg(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = points[i].omega;
    lg[i] = std::log(gamma) + 0.5 * std::log1p(w * w * tau_pd * tau_pd) +
            std::log(points[i].magnitude);
  }
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (lg[i] >= 0.0 && lg[i + 1] < 0.0) {
      const double frac = lg[i] / (lg[i] - lg[i + 1]);
      const double lw = std::log(points[i].omega) +
                        frac * (std::log(points[i + 1].omega) - std::log(points[i].omega));
      const double wc = std::exp(lw);
      const double phase = points[i].phase +
                           frac * (points[i + 1].phase - points[i].phase);
      return {wc, kPi + phase + std::atan(wc * tau_pd)};
    }
  }
  throw OutOfRangeError("open loop has no unity-gain crossing within the FR data range");
}

namespace {

constexpr double kMarginTol = 0.5 * kPi / 180.0;

template <class MarginFn>
TuneResult tune_gamma_impl(MarginFn margin_of, double target, double gamma_max) {
  if (!(gamma_max > 0)) throw ConfigError("gamma_max must be > 0");
  double glo = 1e-6;
  // Shrink the bracket until the crossover exists at both ends (tabulated FR
  // data covers a finite frequency range).
  double m_lo = 0.0, m_hi = 0.0;
  bool lo_ok = false, hi_ok = false;
  while (glo < gamma_max) {
    try {
      m_lo = margin_of(glo);
      lo_ok = true;
      break;
    } catch (const OutOfRangeError&) {
      glo *= 10.0;
    }
  }
  double ghi = gamma_max;
  while (lo_ok && ghi > glo) {
    try {
      m_hi = margin_of(ghi);
      hi_ok = true;
      break;
    } catch (const OutOfRangeError&) {
      ghi /= 10.0;
    }
  }
  if (!lo_ok || !hi_ok) throw OutOfRangeError("no gamma in range yields a unity-gain crossing");
  const double gamma_hi = ghi;

  if (std::fabs(m_lo - m_hi) < 1e-12) {  // margin independent of gamma
    if (std::fabs(m_lo - target) <= kMarginTol) return {gamma_max, true};
    std::ostringstream os;
    os << "target margin " << target << " rad unreachable (loop margin is fixed at " << m_lo
       << " rad)";
    throw OutOfRangeError(os.str());
  }
  if (target > m_lo + kMarginTol || target < m_hi - kMarginTol) {
    std::ostringstream os;
    os << "target margin " << target << " rad outside the achievable range [" << m_hi << ", "
       << m_lo << "] rad";
    throw OutOfRangeError(os.str());
  }
  double lo = glo, hi = gamma_hi;  // margin decreases with gamma
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    const double m = margin_of(mid);
    if (std::fabs(m - target) <= kMarginTol) return {mid, false};
    (m > target ? lo : hi) = mid;
  }
  return {std::sqrt(lo * hi), false};
}

}  // namespace

TuneResult tune_gamma(const NominalModel& model, double target_margin, double tau_pd,
                      double gamma_max) {
  return tune_gamma_impl(
      [&](double g) { return crossover_margin(model, g, tau_pd).margin; }, target_margin,
      gamma_max);
}

TuneResult tune_gamma(std::span<const FRPoint> points, double target_margin, double tau_pd,
                      double gamma_max) {
  return tune_gamma_impl(
      [&](double g) { return crossover_margin(points, g, tau_pd).margin; }, target_margin,
      gamma_max);
}

std::vector<FRPoint> synthetic_fr(const NominalModel& model, std::span<const double> omegas) {
  std::vector<FRPoint> out;
  out.reserve(omegas.size());
  for (double w : omegas) out.push_back({w, model.magnitude(w), model.phase(w)});
  return out;
}

void write_fr_csv(std::span<const FRPoint> points, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw ConfigError("cannot open FR file for writing: " + path.string());
  std::fprintf(f, "omega,magnitude,phase_deg\n");
  for (const auto& p : points)
    std::fprintf(f, "%.17g,%.17g,%.17g\n", p.omega, p.magnitude, p.phase * 180.0 / kPi);
  std::fclose(f);
}

std::vector<FRPoint> read_fr_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open FR file: " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<FRPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FRPoint p;
    double phase_deg = 0.0;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &p.omega, &p.magnitude, &phase_deg) != 3)
      throw ConfigError("malformed FR csv line: " + line);
    p.phase = phase_deg * kPi / 180.0;
    out.push_back(p);
  }
  return out;
}

}  // namespace ond
