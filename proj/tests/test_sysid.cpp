#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "ond/errors.hpp"
#include "ond/sysid.hpp"

using namespace ond;

namespace {

constexpr double kPi = std::numbers::pi;
const MotorParams kPlant{0.0463, 0.0076};

IdConfig motor_id_config() {
  IdConfig cfg;
  cfg.frequencies = log_spaced(1.0, 1000.0, 20);
  return cfg;
}

double deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace

TEST_CASE("log_spaced endpoints and count") {
  const auto w = log_spaced(1.0, 1000.0, 20);
  REQUIRE(w.size() == 20);
  CHECK(w.front() == doctest::Approx(1.0));
  CHECK(w.back() == doctest::Approx(1000.0));
  CHECK(w[1] / w[0] == doctest::Approx(std::pow(1000.0, 1.0 / 19.0)));
  CHECK_THROWS_AS(log_spaced(0.0, 10.0, 5), ConfigError);
}

TEST_CASE("demodulation recovers a known harmonic") {
  const double dt = 1e-4, w = 37.0, A = 0.42, phi = -1.1;
  const long cycles = 200;
  const long n = std::lround(cycles * 2.0 * kPi / (w * dt));  // whole cycles
  std::vector<double> x;
  for (long i = 0; i < n; ++i) x.push_back(5.0 + A * std::sin(w * i * dt + phi));
  const Harmonic h = demodulate(x, dt, w, 0.0);
  CHECK(h.amplitude == doctest::Approx(A).epsilon(1e-6));
  CHECK(h.phase == doctest::Approx(phi).epsilon(1e-4));
}

TEST_CASE("measured FR matches the transfer-function oracle") {
  const auto points = measure_fr(kPlant, motor_id_config());
  REQUIRE(points.size() == 20);
  const NominalModel truth{kPlant.K, kPlant.tau, 0.0};
  for (const auto& p : points) {
    CHECK(p.magnitude == doctest::Approx(truth.magnitude(p.omega)).epsilon(0.01));
    CHECK(deg(std::fabs(p.phase - truth.phase(p.omega))) < 2.0);
  }
  // Spot values pinned from the model: |FR(j1)| and the high-frequency phase.
  CHECK(points.front().magnitude == doctest::Approx(0.046299).epsilon(0.01));
  CHECK(deg(points.back().phase) == doctest::Approx(-90.0 - deg(std::atan(1000 * kPlant.tau)))
                                        .epsilon(0.025));
}

TEST_CASE("double integrator rolls off at -40 dB/dec in closed loop") {
  IdConfig cfg;
  cfg.k_id = 1.0;
  cfg.r0 = 0.0;
  cfg.a = 1.0;
  cfg.frequencies = {3.162, 10.0, 31.62};
  // P-control leaves the loop undamped, so the startup mode at sqrt(k_id) never
  // decays; long windows shrink its leakage into the correlation instead.
  cfg.settle_min_time = 0.0;
  cfg.measure_cycles = 600;
  const auto points = measure_fr(DoubleIntegrator{}, cfg);
  const double slope = std::log10(points[2].magnitude / points[0].magnitude) /
                       std::log10(points[2].omega / points[0].omega);
  CHECK(slope == doctest::Approx(-2.0).epsilon(0.025));
}

TEST_CASE("resonant excitation of an undamped loop trips the output monitor") {
  IdConfig cfg;
  cfg.k_id = 0.01;  // P-control on the double integrator: undamped pole at 0.1 rad/s
  cfg.r0 = 0.0;
  cfg.a = 1.0;
  cfg.frequencies = {0.1};
  cfg.settle_cycles = 10;
  cfg.measure_cycles = 10;
  cfg.settle_min_time = 0.0;
  CHECK_THROWS_AS(measure_fr(DoubleIntegrator{}, cfg), InstabilityError);
}

TEST_CASE("identification config validation") {
  IdConfig cfg = motor_id_config();
  cfg.measure_cycles = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = motor_id_config();
  cfg.frequencies = {100.0, 10.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = motor_id_config();
  cfg.frequencies = {1e5};  // beyond the sampling rate
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("noiseless fit recovers the model almost exactly") {
  const NominalModel truth{0.0463, 0.0076, 0.0};
  const auto omegas = log_spaced(1.0, 1000.0, 20);
  const FitResult fit = fit_model(synthetic_fr(truth, omegas));
  CHECK(fit.K == doctest::Approx(truth.K).epsilon(1e-3));
  CHECK(fit.tau == doctest::Approx(truth.tau).epsilon(1e-3));
  CHECK(fit.excluded_points.empty());
}

TEST_CASE("phase-augmented objective recovers the same model") {
  const NominalModel truth{0.0463, 0.0076, 0.0};
  const auto omegas = log_spaced(1.0, 1000.0, 20);
  FitOptions opts;
  opts.use_phase = true;
  const FitResult fit = fit_model(synthetic_fr(truth, omegas), opts);
  CHECK(fit.K == doctest::Approx(truth.K).epsilon(1e-3));
  CHECK(fit.tau == doctest::Approx(truth.tau).epsilon(1e-3));
}

TEST_CASE("fit is scale-consistent") {
  const NominalModel truth{0.0463, 0.0076, 0.0};
  const auto omegas = log_spaced(1.0, 1000.0, 20);
  auto points = synthetic_fr(truth, omegas);
  const FitResult base = fit_model(points);
  for (auto& p : points) p.magnitude *= 3.7;
  const FitResult scaled = fit_model(points);
  CHECK(scaled.K == doctest::Approx(3.7 * base.K).epsilon(1e-9));
  CHECK(scaled.tau == doctest::Approx(base.tau).epsilon(1e-9));
}

TEST_CASE("low-frequency flattening is excluded") {
  const NominalModel truth{0.0463, 0.0076, 0.0};
  const auto omegas = log_spaced(1.0, 1000.0, 20);
  auto points = synthetic_fr(truth, omegas);
  for (int i = 2; i >= 0; --i)
    points[i].magnitude = points[3].magnitude * std::pow(points[i].omega / points[3].omega, -0.2);
  const FitResult fit = fit_model(points);
  REQUIRE(fit.excluded_points.size() == 3);
  CHECK(fit.excluded_points[0] == omegas[0]);
  CHECK(fit.excluded_points[2] == omegas[2]);
  CHECK(fit.K == doctest::Approx(truth.K).epsilon(1e-3));
  CHECK(fit.tau == doctest::Approx(truth.tau).epsilon(1e-3));
}

TEST_CASE("degenerate data errors") {
  const auto omegas = log_spaced(1.0, 1000.0, 10);
  std::vector<FRPoint> flat;
  for (double w : omegas) flat.push_back({w, std::pow(w, -0.2), 0.0});  // never -20 dB/dec
  CHECK_THROWS_AS(fit_model(flat), ConfigError);
  std::vector<FRPoint> three(flat.begin(), flat.begin() + 3);
  CHECK_THROWS_AS(fit_model(three), ConfigError);
  std::vector<FRPoint> narrow = {{10, 1, 0}, {11, 0.9, 0}, {12, 0.85, 0}, {13, 0.8, 0}};
  CHECK_THROWS_AS(fit_model(narrow), ConfigError);  // less than a decade of span
}

TEST_CASE("crossover of the pole-cancelled nominal loop sits at K*gamma") {
  const NominalModel model{0.0463, 0.0076, 0.0};
  const MarginResult mr = crossover_margin(model, 1000.0, model.tau);
  CHECK(std::fabs(mr.omega_c - 46.3) / 46.3 < 1e-9);
  CHECK(deg(mr.margin) == doctest::Approx(90.0).epsilon(1e-9));
}

TEST_CASE("a pure delay shapes the margin to the design point") {
  NominalModel model{0.0463, 0.0076, 0.0151};
  const MarginResult mr = crossover_margin(model, 1000.0, model.tau);
  CHECK(deg(mr.margin) == doctest::Approx(50.0).epsilon(0.002));
}

TEST_CASE("tabulated-FR crossover agrees with the model path") {
  const NominalModel model{0.0463, 0.0076, 0.0};
  const auto omegas = log_spaced(1.0, 1000.0, 40);
  const auto points = synthetic_fr(model, omegas);
  const MarginResult mr = crossover_margin(std::span<const FRPoint>(points), 1000.0, model.tau);
  CHECK(mr.omega_c == doctest::Approx(46.3).epsilon(0.005));
  CHECK(deg(mr.margin) == doctest::Approx(90.0).epsilon(0.01));
  CHECK_THROWS_AS(crossover_margin(std::span<const FRPoint>(points), 1e-9, model.tau),
                  OutOfRangeError);
}

TEST_CASE("gamma tuning") {
  SUBCASE("inverse of the delay design point") {
    const NominalModel model{0.0463, 0.0076, 0.0151};
    const TuneResult r = tune_gamma(model, 50.0 * kPi / 180.0, model.tau);
    CHECK(!r.at_boundary);
    CHECK(r.gamma == doctest::Approx(1000.0).epsilon(0.05));
  }
  SUBCASE("margin independent of gamma returns the boundary with a flag") {
    const NominalModel model{0.0463, 0.0076, 0.0};
    const TuneResult r = tune_gamma(model, 90.0 * kPi / 180.0, model.tau, 1e5);
    CHECK(r.at_boundary);
    CHECK(r.gamma == 1e5);
  }
  SUBCASE("a margin beyond the phase ceiling is out of range") {
    const NominalModel model{0.0463, 0.0076, 0.0};
    CHECK_THROWS_AS(tune_gamma(model, 120.0 * kPi / 180.0, model.tau), OutOfRangeError);
    NominalModel delayed{0.0463, 0.0076, 0.0151};
    CHECK_THROWS_AS(tune_gamma(delayed, 120.0 * kPi / 180.0, delayed.tau), OutOfRangeError);
  }
  SUBCASE("tabulated FR data tunes to the same gain") {
    const NominalModel delayed{0.0463, 0.0076, 0.0151};
    const auto omegas = log_spaced(1.0, 1000.0, 60);
    const auto points = synthetic_fr(delayed, omegas);
    const TuneResult r =
        tune_gamma(std::span<const FRPoint>(points), 50.0 * kPi / 180.0, delayed.tau);
    CHECK(r.gamma == doctest::Approx(1000.0).epsilon(0.05));
  }
}

TEST_CASE("FR csv round trip") {
  const NominalModel model{0.0463, 0.0076, 0.0};
  const auto omegas = log_spaced(1.0, 1000.0, 12);
  const auto points = synthetic_fr(model, omegas);
  const auto path = std::filesystem::temp_directory_path() / "ond_fr_test.csv";
  write_fr_csv(points, path);
  const auto back = read_fr_csv(path);
  REQUIRE(back.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(back[i].omega == points[i].omega);
    CHECK(back[i].magnitude == points[i].magnitude);
    CHECK(back[i].phase == doctest::Approx(points[i].phase).epsilon(1e-12));
  }
  std::filesystem::remove(path);
}
