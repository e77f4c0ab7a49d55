#include <string>

#include "json.hpp"
#include "ond/errors.hpp"
#include "ond/scenario.hpp"

namespace ond {

namespace {

using json = nlohmann::ordered_json;

std::string reference_kind_name(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::Constant: return "constant";
    case ReferenceKind::Step: return "step";
    case ReferenceKind::Slope: return "slope";
    case ReferenceKind::PiecewiseLinear: return "piecewise-linear";
    case ReferenceKind::Sinusoid: return "sinusoid";
  }
  return "constant";
}

ReferenceKind reference_kind_from(const std::string& s) {
  if (s == "constant") return ReferenceKind::Constant;
  if (s == "step") return ReferenceKind::Step;
  if (s == "slope") return ReferenceKind::Slope;
  if (s == "piecewise-linear") return ReferenceKind::PiecewiseLinear;
  if (s == "sinusoid") return ReferenceKind::Sinusoid;
  throw ConfigError("unknown reference kind: " + s);
}

json pairs_to_json(const std::vector<std::pair<double, double>>& v) {
  json out = json::array();
  for (const auto& [a, b] : v) out.push_back(json::array({a, b}));
  return out;
}

std::vector<std::pair<double, double>> pairs_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw ConfigError(std::string(field) + " must be an array of [t, value]");
  std::vector<std::pair<double, double>> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError(std::string(field) + " entries must be [t, value] pairs");
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

json reference_to_json(const ReferenceSpec& r) {
  json j;
  j["kind"] = reference_kind_name(r.kind);
  j["offset"] = r.offset;
  switch (r.kind) {
    case ReferenceKind::Step:
      j["amplitude"] = r.amplitude;
      break;
    case ReferenceKind::Slope:
      j["slope_rate"] = r.slope_rate;
      break;
    case ReferenceKind::Sinusoid:
      j["amplitude"] = r.amplitude;
      j["frequency"] = r.frequency;
      break;
    case ReferenceKind::PiecewiseLinear:
      j["breakpoints"] = pairs_to_json(r.breakpoints);
      break;
    default:
      break;
  }
  return j;
}

ReferenceSpec reference_from_json(const json& j) {
  ReferenceSpec r;
  r.kind = reference_kind_from(j.value("kind", "constant"));
  r.offset = j.value("offset", 0.0);
  r.amplitude = j.value("amplitude", 0.0);
  r.frequency = j.value("frequency", 0.0);
  r.slope_rate = j.value("slope_rate", 0.0);
  if (j.contains("breakpoints")) r.breakpoints = pairs_from_json(j["breakpoints"], "breakpoints");
  r.validate();
  return r;
}

json plant_to_json(const PlantSpec& p) {
  json j;
  if (std::holds_alternative<DoubleIntegrator>(p)) {
    j["type"] = "double-integrator";
  } else if (const auto* m = std::get_if<MotorParams>(&p)) {
    j["type"] = "motor";
    j["K"] = m->K;
    j["tau"] = m->tau;
  } else {
    const auto& vc = std::get<VoiceCoilParams>(p);
    j["type"] = "voice-coil";
    j["K"] = vc.motor.K;
    j["tau"] = vc.motor.tau;
    j["mass"] = vc.mass;
    j["Ku"] = vc.Ku;
    j["g"] = vc.g;
    j["ripple_amplitude"] = vc.ripple_amplitude;
    j["ripple_period"] = vc.ripple_period;
    j["coulomb"] = vc.coulomb;
    j["stroke_limit"] = vc.stroke_limit;
    j["xi_const"] = vc.xi_const;
  }
  return j;
}

PlantSpec plant_from_json(const json& j) {
  const std::string type = j.value("type", "double-integrator");
  if (type == "double-integrator") return DoubleIntegrator{};
  if (type == "motor") {
    MotorParams m;
    m.K = j.value("K", m.K);
    m.tau = j.value("tau", m.tau);
    m.validate();
    return m;
  }
  if (type == "voice-coil") {
    VoiceCoilParams vc = voice_coil_lab_preset();  // named preset as the base
    vc.motor.K = j.value("K", vc.motor.K);
    vc.motor.tau = j.value("tau", vc.motor.tau);
    vc.mass = j.value("mass", vc.mass);
    vc.Ku = j.value("Ku", vc.Ku);
    vc.g = j.value("g", vc.g);
    vc.ripple_amplitude = j.value("ripple_amplitude", vc.ripple_amplitude);
    vc.ripple_period = j.value("ripple_period", vc.ripple_period);
    vc.coulomb = j.value("coulomb", vc.coulomb);
    vc.stroke_limit = j.value("stroke_limit", vc.stroke_limit);
    vc.xi_const = j.value("xi_const", vc.xi_const);
    vc.validate();
    return vc;
  }
  throw ConfigError("unknown plant type: " + type);
}

json controller_to_json(const ControllerSpec& c) {
  json j;
  switch (c.type) {
    case ControllerType::OndRaw:
      j["type"] = "ond-raw";
      j["k"] = c.ond.k;
      break;
    case ControllerType::Ond:
      j["type"] = "ond";
      j["k"] = c.ond.k;
      j["mu"] = c.ond.mu;
      break;
    case ControllerType::OndScaled:
      j["type"] = "ond-scaled";
      j["k"] = c.ond.k;
      j["mu"] = c.ond.mu;
      j["tau"] = c.ond.tau;
      j["K"] = c.ond.Kg;
      break;
    case ControllerType::Pd:
      j["type"] = "pd";
      j["gamma"] = c.pd.gamma;
      j["tau"] = c.pd.tau;
      break;
  }
  if (c.S)
    j["S"] = *c.S;
  else
    j["S"] = nullptr;
  return j;
}

ControllerSpec controller_from_json(const json& j) {
  ControllerSpec c;
  const std::string type = j.value("type", "ond");
  if (type == "ond-raw")
    c.type = ControllerType::OndRaw;
  else if (type == "ond")
    c.type = ControllerType::Ond;
  else if (type == "ond-scaled")
    c.type = ControllerType::OndScaled;
  else if (type == "pd")
    c.type = ControllerType::Pd;
  else
    throw ConfigError("unknown controller type: " + type);
  c.ond.k = j.value("k", c.ond.k);
  c.ond.mu = j.value("mu", c.ond.mu);
  c.ond.tau = j.value("tau", c.ond.tau);
  c.ond.Kg = j.value("K", c.ond.Kg);
  c.pd.gamma = j.value("gamma", c.pd.gamma);
  c.pd.tau = j.value("tau", c.pd.tau);
  if (j.contains("S") && !j["S"].is_null()) c.S = j["S"].get<double>();
  c.validate();
  return c;
}

json estimator_to_json(const EstimatorSpec& e) {
  json j;
  switch (e.type) {
    case EstimatorType::TrueState:
      j["type"] = "true-state";
      break;
    case EstimatorType::Smd:
      j["type"] = "smd";
      j["k0"] = e.smd.k0;
      j["k1"] = e.smd.k1;
      j["k2"] = e.smd.k2;
      j["rho"] = e.smd.rho;
      break;
    case EstimatorType::Lpf:
      j["type"] = "lpf";
      j["cutoff_hz"] = e.cutoff_hz;
      break;
  }
  return j;
}

EstimatorSpec estimator_from_json(const json& j) {
  EstimatorSpec e;
  const std::string type = j.value("type", "true-state");
  if (type == "true-state")
    e.type = EstimatorType::TrueState;
  else if (type == "smd")
    e.type = EstimatorType::Smd;
  else if (type == "lpf")
    e.type = EstimatorType::Lpf;
  else
    throw ConfigError("unknown estimator type: " + type);
  e.smd.k0 = j.value("k0", e.smd.k0);
  e.smd.k1 = j.value("k1", e.smd.k1);
  e.smd.k2 = j.value("k2", e.smd.k2);
  e.smd.rho = j.value("rho", e.smd.rho);
  e.cutoff_hz = j.value("cutoff_hz", e.cutoff_hz);
  return e;
}

json disturbance_to_json(const DisturbanceSpec& d) {
  json j;
  switch (d.kind) {
    case DisturbanceKind::None:
      j["kind"] = "none";
      break;
    case DisturbanceKind::Constant:
      j["kind"] = "constant";
      j["magnitude"] = d.magnitude;
      break;
    case DisturbanceKind::Pulse:
      j["kind"] = "pulse";
      j["magnitude"] = d.magnitude;
      j["window"] = json::array({d.t_start, d.t_end});
      break;
    case DisturbanceKind::ManualProfile:
      j["kind"] = "manual-profile";
      j["profile"] = pairs_to_json(d.profile);
      break;
  }
  return j;
}

DisturbanceSpec disturbance_from_json(const json& j) {
  DisturbanceSpec d;
  const std::string kind = j.value("kind", "none");
  if (kind == "none")
    d.kind = DisturbanceKind::None;
  else if (kind == "constant")
    d.kind = DisturbanceKind::Constant;
  else if (kind == "pulse")
    d.kind = DisturbanceKind::Pulse;
  else if (kind == "manual-profile")
    d.kind = DisturbanceKind::ManualProfile;
  else
    throw ConfigError("unknown disturbance kind: " + kind);
  d.magnitude = j.value("magnitude", 0.0);
  if (j.contains("window")) {
    const auto& w = j["window"];
    if (!w.is_array() || w.size() != 2) throw ConfigError("disturbance window must be [t0, t1]");
    d.t_start = w[0].get<double>();
    d.t_end = w[1].get<double>();
  }
  if (j.contains("profile")) d.profile = pairs_from_json(j["profile"], "profile");
  d.validate();
  return d;
}

}  // namespace

std::string sim_config_to_json(const SimConfig& cfg) {
  json j;
  j["dt_plant"] = cfg.dt_plant;
  j["dt_control"] = cfg.dt_control;
  j["horizon"] = cfg.horizon;
  j["integrator"] = cfg.integrator == IntegratorKind::Rk4 ? "rk4" : "euler";
  j["record_stride"] = cfg.record_stride;
  j["initial"] = json::array({cfg.initial.x1, cfg.initial.x2});
  j["plant"] = plant_to_json(cfg.plant);
  j["controller"] = controller_to_json(cfg.controller);
  j["estimator"] = estimator_to_json(cfg.estimator);
  j["reference"] = reference_to_json(cfg.reference);
  j["disturbance"] = disturbance_to_json(cfg.disturbance);
  j["noise"] = json{{"sensor_std", cfg.noise.sensor_std}, {"seed", cfg.noise.seed}};
  j["jitter"] = json{{"amplitude", cfg.jitter.amplitude}, {"frequency", cfg.jitter.frequency}};
  return j.dump(2);
}

SimConfig sim_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    SimConfig cfg;
    cfg.dt_plant = j.value("dt_plant", cfg.dt_plant);
    cfg.dt_control = j.value("dt_control", cfg.dt_control);
    cfg.horizon = j.value("horizon", cfg.horizon);
    const std::string integ = j.value("integrator", "rk4");
    if (integ == "rk4")
      cfg.integrator = IntegratorKind::Rk4;
    else if (integ == "euler")
      cfg.integrator = IntegratorKind::Euler;
    else
      throw ConfigError("unknown integrator: " + integ);
    cfg.record_stride = j.value("record_stride", cfg.record_stride);
    if (j.contains("initial")) {
      const auto& ini = j["initial"];
      if (!ini.is_array() || ini.size() != 2) throw ConfigError("initial must be [x1, x2]");
      cfg.initial = {ini[0].get<double>(), ini[1].get<double>()};
    }
    if (j.contains("plant")) cfg.plant = plant_from_json(j["plant"]);
    if (j.contains("controller")) cfg.controller = controller_from_json(j["controller"]);
    if (j.contains("estimator")) cfg.estimator = estimator_from_json(j["estimator"]);
    if (j.contains("reference")) cfg.reference = reference_from_json(j["reference"]);
    if (j.contains("disturbance")) cfg.disturbance = disturbance_from_json(j["disturbance"]);
    if (j.contains("noise")) {
      cfg.noise.sensor_std = j["noise"].value("sensor_std", 0.0);
      cfg.noise.seed = j["noise"].value("seed", std::uint64_t{0});
    }
    if (j.contains("jitter")) {
      cfg.jitter.amplitude = j["jitter"].value("amplitude", 0.0);
      cfg.jitter.frequency = j["jitter"].value("frequency", 450.0);
    }
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
}

}  // namespace ond
