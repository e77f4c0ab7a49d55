#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ond/errors.hpp"
#include "ond/signals.hpp"

using namespace ond;

TEST_CASE("constant reference") {
  ReferenceSpec spec;
  spec.kind = ReferenceKind::Constant;
  spec.offset = 0.01;
  const auto [r, rd] = eval_reference(spec, 5.0);
  CHECK(r == 0.01);
  CHECK(rd == 0.0);
}

TEST_CASE("slope reference at the catalog rate") {
  ReferenceSpec spec;
  spec.kind = ReferenceKind::Slope;
  spec.slope_rate = 0.002;
  const auto [r, rd] = eval_reference(spec, 3.0);
  CHECK(r == doctest::Approx(0.006).epsilon(1e-12));
  CHECK(rd == 0.002);
}

TEST_CASE("sinusoid phase-zero derivative") {
  ReferenceSpec spec;
  spec.kind = ReferenceKind::Sinusoid;
  spec.amplitude = 0.004;
  spec.frequency = 10.0;
  spec.offset = 0.006;
  const auto [r, rd] = eval_reference(spec, 0.0);
  CHECK(r == 0.006);
  CHECK(rd == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("step reports the post-step value and zero derivative") {
  ReferenceSpec spec;
  spec.kind = ReferenceKind::Step;
  spec.amplitude = 0.01;
  spec.offset = 0.002;
  CHECK(eval_reference(spec, 0.0).r == doctest::Approx(0.012));
  CHECK(eval_reference(spec, 0.0).r_dot == 0.0);
  CHECK(eval_reference(spec, 2.0).r == doctest::Approx(0.012));
}

TEST_CASE("piecewise-linear interpolation, hold, and segment slopes") {
  ReferenceSpec spec;
  spec.kind = ReferenceKind::PiecewiseLinear;
  spec.breakpoints = {{0.0, 0.0}, {1.0, 0.01}, {3.0, 0.01}, {4.0, 0.002}};
  CHECK(eval_reference(spec, 0.5).r == doctest::Approx(0.005));
  CHECK(eval_reference(spec, 0.5).r_dot == doctest::Approx(0.01));
  CHECK(eval_reference(spec, 2.0).r == doctest::Approx(0.01));
  CHECK(eval_reference(spec, 2.0).r_dot == 0.0);
  CHECK(eval_reference(spec, 3.5).r_dot == doctest::Approx(-0.008));
  // Right-continuous derivative at a breakpoint.
  CHECK(eval_reference(spec, 1.0).r_dot == 0.0);
  // Held outside the table.
  CHECK(eval_reference(spec, 9.0).r == doctest::Approx(0.002));
  CHECK(eval_reference(spec, 9.0).r_dot == 0.0);
}

TEST_CASE("malformed breakpoints are a configuration error") {
  ReferenceSpec spec;
  spec.kind = ReferenceKind::PiecewiseLinear;
  spec.breakpoints = {{0.0, 0.0}, {1.0, 0.01}, {1.0, 0.02}};
  CHECK_THROWS_AS(eval_reference(spec, 0.5), ConfigError);
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.breakpoints.clear();
  CHECK_THROWS_AS(eval_reference(spec, 0.5), ConfigError);
}

TEST_CASE("sinusoid requires a positive frequency") {
  ReferenceSpec spec;
  spec.kind = ReferenceKind::Sinusoid;
  spec.frequency = 0.0;
  CHECK_THROWS_AS(eval_reference(spec, 1.0), ConfigError);
}

TEST_CASE("analytic derivative agrees with a central difference for smooth kinds") {
  const double h = 1e-6;
  std::vector<ReferenceSpec> specs(3);
  specs[0].kind = ReferenceKind::Slope;
  specs[0].slope_rate = 0.002;
  specs[1].kind = ReferenceKind::Sinusoid;
  specs[1].amplitude = 0.005;
  specs[1].frequency = 10.0;
  specs[2].kind = ReferenceKind::PiecewiseLinear;
  specs[2].breakpoints = {{0.0, 0.0}, {2.0, 0.01}, {4.0, 0.0}};
  for (const auto& spec : specs) {
    for (double t : {0.3, 0.9, 1.7, 2.5, 3.3}) {
      const double fd =
          (eval_reference(spec, t + h).r - eval_reference(spec, t - h).r) / (2.0 * h);
      CHECK(fd == doctest::Approx(eval_reference(spec, t).r_dot).epsilon(1e-6));
    }
  }
}

TEST_CASE("jitter sign convention and amplitude") {
  JitterSpec j{0.2, 450.0};
  CHECK(eval_jitter(j, 0.0) == 0.2);
  CHECK(eval_jitter(j, std::numbers::pi / 450.0) == -0.2);  // half-period boundary crossed
  CHECK(eval_jitter(JitterSpec{0.0, 450.0}, 0.123) == 0.0);
}

TEST_CASE("jitter has zero mean over whole periods") {
  const JitterSpec j{0.2, 450.0};
  const double period = 2.0 * std::numbers::pi / j.frequency;
  for (int periods : {1, 3, 7}) {
    const int n = 1000 * periods;
    double acc = 0.0;
    // midpoint sampling keeps samples off the switching instants
    for (int i = 0; i < n; ++i) acc += eval_jitter(j, periods * period * (i + 0.5) / n);
    CHECK(std::fabs(acc / n) < 1e-12);
  }
}

TEST_CASE("jitter validation") {
  CHECK_THROWS_AS(eval_jitter(JitterSpec{0.1, 0.0}, 1.0), ConfigError);
  const JitterSpec negative{-0.1, 450.0};
  CHECK_THROWS_AS(negative.validate(), ConfigError);
}

TEST_CASE("noise stream is a pure function of (seed, index)") {
  const NoiseSpec a{4e-6, 42};
  const NoiseSpec b{4e-6, 42};
  const NoiseSpec c{4e-6, 43};
  bool any_diff = false;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    CHECK(sample_noise(a, i) == sample_noise(b, i));
    any_diff = any_diff || sample_noise(a, i) != sample_noise(c, i);
  }
  CHECK(any_diff);
}

TEST_CASE("zero std collapses the stream") {
  const NoiseSpec spec{0.0, 99};
  for (std::uint64_t i = 0; i < 100; ++i) CHECK(sample_noise(spec, i) == 0.0);
}

TEST_CASE("sample statistics match the configured std") {
  const NoiseSpec spec{4e-6, 7};
  const std::uint64_t n = 100000;
  double acc = 0.0, acc2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double v = sample_noise(spec, i);
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / n;
  const double std = std::sqrt(acc2 / n - mean * mean);
  CHECK(std == doctest::Approx(4e-6).epsilon(0.02));
  CHECK(std::fabs(mean) < 4e-6 * 0.02);
}
