#include "ond/sim_engine.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ond {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double ratio_as_integer(double dt_control, double dt_plant) {
  const double ratio = dt_control / dt_plant;
  const double rounded = std::floor(ratio + 0.5);
  if (rounded < 1 || std::fabs(ratio - rounded) > 1e-6 * rounded)
    throw ConfigError("dt_control must be an integer multiple of dt_plant");
  return rounded;
}

Deriv2 plant_rhs(const PlantSpec& plant, const State2& s, double u_fb, double xi, double t,
                 const JitterSpec& jitter) {
  return std::visit(
      overloaded{
          [&](const DoubleIntegrator&) { return rhs_double_integrator(s, u_fb + xi); },
          [&](const MotorParams& p) { return rhs_motor(s, u_fb, p, xi); },
          [&](const VoiceCoilParams& p) {
            const double U = u_fb + p.mass * p.g / p.Ku + eval_jitter(jitter, t);
            return rhs_voice_coil(s, U, p, xi);
          },
      },
      plant);
}

double measure(const PlantSpec& plant, const State2& s, double noise) {
  if (const auto* vc = std::get_if<VoiceCoilParams>(&plant))
    return measure_position(s, *vc, noise);
  return measure_position(s, noise);
}

double eval_control(const ControllerSpec& c, double r, double r_dot, double x1m, double v_est) {
  const ErrorState err{x1m - r, v_est - r_dot};
  switch (c.type) {
    case ControllerType::OndRaw:
      return ond_raw(State2{err.e1, err.e2}, c.ond.k);
    case ControllerType::Ond:
      return ond_regularized(err, c.ond);
    case ControllerType::OndScaled:
      return ond_scaled(err, v_est, c.ond);
    case ControllerType::Pd:
      return pd_control(r, x1m, v_est, c.pd);
  }
  throw ConfigError("unknown controller type");
}

State2 step_state(const SimConfig& cfg, const State2& s, double t, double h, double u_fb) {
  auto f = [&](const State2& q, double tt) {
    return plant_rhs(cfg.plant, q, u_fb, cfg.disturbance.eval(tt), tt, cfg.jitter);
  };
  if (cfg.integrator == IntegratorKind::Euler) {
    const Deriv2 d = f(s, t);
    return {s.x1 + h * d.dx1, s.x2 + h * d.dx2};
  }
  const Deriv2 k1 = f(s, t);
  const Deriv2 k2 = f({s.x1 + 0.5 * h * k1.dx1, s.x2 + 0.5 * h * k1.dx2}, t + 0.5 * h);
  const Deriv2 k3 = f({s.x1 + 0.5 * h * k2.dx1, s.x2 + 0.5 * h * k2.dx2}, t + 0.5 * h);
  const Deriv2 k4 = f({s.x1 + h * k3.dx1, s.x2 + h * k3.dx2}, t + h);
  return {s.x1 + h / 6.0 * (k1.dx1 + 2 * k2.dx1 + 2 * k3.dx1 + k4.dx1),
          s.x2 + h / 6.0 * (k1.dx2 + 2 * k2.dx2 + 2 * k3.dx2 + k4.dx2)};
}

void append_row(SimTrace& tr, double t, const ReferenceSample& ref, const State2& s, double x1m,
                double v_est, double u_raw, double u_app, double xi, const ControllerSpec& c) {
  const bool is_pd = c.type == ControllerType::Pd;
  const double gain = is_pd ? c.pd.gamma : c.ond.k;
  const ErrorState et{s.x1 - ref.r, s.x2 - ref.r_dot};
  tr.t.push_back(t);
  tr.r.push_back(ref.r);
  tr.r_dot.push_back(ref.r_dot);
  tr.x1_true.push_back(s.x1);
  tr.x2_true.push_back(s.x2);
  tr.x1_meas.push_back(x1m);
  tr.v_est.push_back(v_est);
  tr.e1.push_back(et.e1);
  tr.e2.push_back(et.e2);
  tr.u_raw.push_back(u_raw);
  tr.u_applied.push_back(u_app);
  tr.xi.push_back(xi);
  tr.V.push_back(lyapunov_energy(et, gain));
  tr.V_rate.push_back(is_pd ? std::numeric_limits<double>::quiet_NaN()
                            : lyapunov_rate(et, c.ond.mu));
  tr.attractor_residual.push_back(attractor_residual(State2{et.e1, et.e2}, gain));
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt_plant > 0)) throw ConfigError("dt_plant must be > 0");
  if (!(dt_control >= dt_plant)) throw ConfigError("dt_control must be >= dt_plant");
  if (!(horizon > 0)) throw ConfigError("horizon must be > 0");
  if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
  ratio_as_integer(dt_control, dt_plant);
  std::visit([](const auto& p) {
    if constexpr (!std::is_same_v<std::decay_t<decltype(p)>, DoubleIntegrator>) p.validate();
  }, plant);
  controller.validate();
  estimator.validate(dt_control);
  reference.validate();
  disturbance.validate();
  jitter.validate();
  if (noise.sensor_std < 0) throw ConfigError("sensor_std must be >= 0");
  if (controller.type == ControllerType::OndRaw) {
    const double e1_0 = initial.x1 - eval_reference(reference, 0.0).r;
    if (e1_0 == 0.0 && initial.x2 != eval_reference(reference, 0.0).r_dot)
      throw ConfigError("ond_raw is inadmissible from a zero initial position error");
  }
}

SimTrace run_closed_loop(const SimConfig& cfg) {
  cfg.validate();
  const long sub = static_cast<long>(ratio_as_integer(cfg.dt_control, cfg.dt_plant));
  const double dtc = cfg.dt_control;
  const double dtp = dtc / static_cast<double>(sub);
  const long n_ctrl = std::lround(cfg.horizon / dtc);

  VelocityEstimator est(cfg.estimator, dtc);
  SimTrace tr;
  const std::size_t rows = static_cast<std::size_t>(n_ctrl / cfg.record_stride) + 2;
  tr.t.reserve(rows);

  State2 s = cfg.initial;
  for (long i = 0; i <= n_ctrl; ++i) {
    const double t = static_cast<double>(i) * dtc;
    const ReferenceSample ref = eval_reference(cfg.reference, t);
    const double noise = sample_noise(cfg.noise, static_cast<std::uint64_t>(i));
    const double x1m = measure(cfg.plant, s, noise);
    const double v_est = est.update(x1m, s.x2);
    const double u_raw = eval_control(cfg.controller, ref.r, ref.r_dot, x1m, v_est);
    const double u_app = saturate(u_raw, cfg.controller.S);
    if (i % cfg.record_stride == 0)
      append_row(tr, t, ref, s, x1m, v_est, u_raw, u_app, cfg.disturbance.eval(t),
                 cfg.controller);
    if (i == n_ctrl) break;
    for (long j = 0; j < sub; ++j) s = step_state(cfg, s, t + static_cast<double>(j) * dtp, dtp, u_app);
    if (!std::isfinite(s.x1) || !std::isfinite(s.x2)) {
      std::ostringstream os;
      os << "state is not finite at t = " << t + dtc << " (x1 = " << s.x1 << ", x2 = " << s.x2
         << ")";
      throw SimulationAborted(os.str(), std::move(tr));
    }
  }
  return tr;
}

ConvergencePair run_convergence_benchmark(double k, double mu, double pd_tau, State2 x0,
                                          double horizon) {
  if (!(k > 0)) throw ConfigError("convergence benchmark requires k > 0");
  const double crit = 2.0 / std::sqrt(k);
  if (std::fabs(pd_tau - crit) > 1e-9 * crit)
    throw ConfigError("convergence benchmark requires the critically damped pairing pd_tau = 2/sqrt(k)");

  SimConfig base;
  base.dt_plant = 1e-5;
  base.dt_control = 1e-4;
  base.horizon = horizon;
  base.initial = x0;
  base.record_stride = 10;  // 1 ms rows

  SimConfig ond_cfg = base;
  ond_cfg.controller.type = ControllerType::Ond;
  ond_cfg.controller.ond.k = k;
  ond_cfg.controller.ond.mu = mu;

  SimConfig pd_cfg = base;
  pd_cfg.controller.type = ControllerType::Pd;
  pd_cfg.controller.pd = PdGains{k, pd_tau};  // same output feedback gain

  ConvergencePair out;
  out.ond = run_closed_loop(ond_cfg);
  out.pd = run_closed_loop(pd_cfg);
  out.t = out.ond.t;

  const double floor = out.report.floor;
  const std::size_t n = std::min(out.ond.size(), out.pd.size());
  out.log10_ond.reserve(n);
  out.log10_pd.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.log10_ond.push_back(std::log10(std::max(std::fabs(out.ond.x1_true[i]), floor)));
    out.log10_pd.push_back(std::log10(std::max(std::fabs(out.pd.x1_true[i]), floor)));
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double a_ond = std::fabs(out.ond.x1_true[i]);
    const double a_pd = std::fabs(out.pd.x1_true[i]);
    if (out.report.t_pd_floor < 0 && a_pd < floor) out.report.t_pd_floor = out.t[i];
    if (a_pd <= floor) continue;
    if (out.report.t_first_below < 0 && a_ond < a_pd) out.report.t_first_below = out.t[i];
    if (out.report.t_first_below >= 0 && out.report.t_dominance_lost < 0 && a_ond >= a_pd)
      out.report.t_dominance_lost = out.t[i];
  }
  out.report.dominant_to_floor = out.report.t_first_below >= 0 && out.report.t_pd_floor >= 0 &&
                                 (out.report.t_dominance_lost < 0 ||
                                  out.report.t_dominance_lost >= out.report.t_pd_floor);
  return out;
}

SteadyStateResult run_disturbance_steady_state(double k, double xi, const MotorParams& plant,
                                               const SteadyStateOptions& opts) {
  plant.validate();
  if (!(k > 0)) throw ConfigError("disturbance steady state requires k > 0");

  SimConfig cfg;
  cfg.dt_plant = opts.dt;
  cfg.dt_control = opts.dt;
  cfg.horizon = opts.horizon;
  cfg.plant = plant;
  cfg.controller.type = ControllerType::OndScaled;
  cfg.controller.ond = OndGains{k, opts.mu, plant.tau, plant.K};
  cfg.disturbance.kind = DisturbanceKind::Constant;
  cfg.disturbance.magnitude = xi;

  const SimTrace tr = run_closed_loop(cfg);
  const long hold_n = std::lround(opts.hold / opts.dt);
  long run = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (std::fabs(tr.x2_true[i]) < opts.settle_velocity) {
      if (++run >= hold_n + 1) {
        double mean = 0.0;
        for (std::size_t j = i + 1 - static_cast<std::size_t>(hold_n + 1); j <= i; ++j)
          mean += tr.x1_true[j];
        mean /= static_cast<double>(hold_n + 1);
        return {mean, tr.t[i]};
      }
    } else {
      run = 0;
    }
  }
  std::ostringstream os;
  os << "loop did not settle below |x2| < " << opts.settle_velocity << " m/s for " << opts.hold
     << " s within " << opts.horizon << " s";
  throw TimeoutError(os.str());
}

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw ConfigError("cannot open trace file for writing: " + path.string());
  std::fprintf(f, "%s\n", SimTrace::kCsvHeader);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::fprintf(f,
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g\n",
                 trace.t[i], trace.r[i], trace.r_dot[i], trace.x1_true[i], trace.x2_true[i],
                 trace.x1_meas[i], trace.v_est[i], trace.e1[i], trace.e2[i], trace.u_raw[i],
                 trace.u_applied[i], trace.xi[i], trace.V[i], trace.V_rate[i],
                 trace.attractor_residual[i]);
  }
  std::fclose(f);
}

}  // namespace ond
