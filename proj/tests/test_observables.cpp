#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "zenosim/model.hpp"
#include "zenosim/observables.hpp"
#include "zenosim/propagator.hpp"
#include "test_support.hpp"

using namespace zenosim;
using Catch::Approx;

TEST_CASE("steady state: normalized intensity is one") {
  std::mt19937_64 rng(505);
  for (int it = 0; it < 50; ++it) {
    const RateParams p = testing::random_params(rng);
    const StateVector ss = cw_steady_state(p);
    REQUIRE(std::abs(ss.population_sum() - 1.0) <= 1e-12);
    const double norm = intensity_norm(p);
    REQUIRE(instantaneous_intensity(ss, p, norm) == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("instantaneous intensity: background floor") {
  const RateParams p;
  const double norm = intensity_norm(p);
  const StateVector ground{0.92, 0.08, 0, 0, 0, 0};
  CHECK(instantaneous_intensity(ground, p, norm) == p.i_bg);
  CHECK_THROWS_AS(instantaneous_intensity(ground, p, 0.0), domain_error);
  CHECK_THROWS_AS(instantaneous_intensity(ground, p, -1.0), domain_error);
}

TEST_CASE("transient from bright preparation overshoots the steady state") {
  const RateParams p;
  const double norm = intensity_norm(p);
  const Generator g = build_generator(p, Controls{1.0, false, true});
  const Trajectory traj =
      propagate_sampled(StateVector{0.92, 0.08, 0, 0, 0, 0}, g, 2e-6, 201);
  double peak = 0;
  for (const auto& st : traj.states)
    peak = std::max(peak, instantaneous_intensity(st, p, norm));
  CHECK(peak > 1.2);                      // switch-on overshoot
  CHECK(peak == Approx(1.3517).margin(5e-3));  // frozen from the fine-step oracle
  CHECK(instantaneous_intensity(traj.states.back(), p, norm) ==
        Approx(1.0).margin(1e-5));
}

TEST_CASE("differential signal") {
  std::vector<IntensitySample> a{{0, 1.0}, {1e-9, 1.2}, {2e-9, 1.1}};
  std::vector<IntensitySample> b{{0, 0.9}, {1e-9, 1.0}, {2e-9, 1.1}};

  const auto d = differential_signal(a, b);
  CHECK(d[0].intensity == Approx(0.1));
  CHECK(d[2].intensity == Approx(0.0).margin(1e-15));

  const auto identical = differential_signal(a, a);
  for (const auto& s : identical) CHECK(s.intensity == 0.0);

  const auto swapped = differential_signal(b, a);
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(swapped[i].intensity == Approx(-d[i].intensity).margin(1e-15));

  auto c = b;
  c[1].time = 1.5e-9;
  CHECK_THROWS_AS(differential_signal(a, c), domain_error);
  c = b;
  c.pop_back();
  CHECK_THROWS_AS(differential_signal(a, c), domain_error);
}

TEST_CASE("readout intensity: window averaging") {
  const RateParams p;
  const Generator g = build_generator(p, Controls{1.0, false, true});
  const Trajectory traj =
      propagate_sampled(StateVector{0.92, 0.08, 0, 0, 0, 0}, g, 1e-6, 1001);
  const double norm = intensity_norm(p);

  SECTION("zero-length window reduces to the instantaneous value") {
    const double t = traj.times[137];
    CHECK(readout_intensity(traj, p, t, 0.0) ==
          Approx(instantaneous_intensity(traj.states[137], p, norm)).margin(1e-14));
  }

  SECTION("constant stretch averages to the constant") {
    // a ground-manifold state under no laser emits the background only
    const Generator dark_gen = build_generator(p, Controls{0.0, false, true});
    const Trajectory flat =
        propagate_sampled(StateVector{0.92, 0.08, 0, 0, 0, 0}, dark_gen, 1e-6, 101);
    CHECK(readout_intensity(flat, p, 0.2e-6, 0.5e-6) ==
          Approx(p.i_bg).margin(1e-12));
  }

  SECTION("window outside the span throws") {
    CHECK_THROWS_AS(readout_intensity(traj, p, 0.9e-6, 0.2e-6), domain_error);
    CHECK_THROWS_AS(readout_intensity(traj, p, -0.1e-6, 0.05e-6), domain_error);
  }
}

TEST_CASE("transient pair: dark-state shape and differential decay") {
  const RateParams p;
  const double norm = intensity_norm(p);
  const Generator g = build_generator(p, Controls{1.0, false, true});
  const Trajectory bright =
      propagate_sampled(StateVector{0.92, 0.08, 0, 0, 0, 0}, g, 3e-6, 301);
  const Trajectory dark =
      propagate_sampled(StateVector{0.08, 0.92, 0, 0, 0, 0}, g, 3e-6, 301);

  std::vector<IntensitySample> tb, td;
  for (std::size_t i = 0; i < bright.size(); ++i) {
    tb.push_back({bright.times[i], instantaneous_intensity(bright.states[i], p, norm)});
    td.push_back({dark.times[i], instantaneous_intensity(dark.states[i], p, norm)});
  }

  // the dark trace starts at the background, stays below the bright one
  // early on, and repolarizes to the common steady state
  CHECK(td.front().intensity == Approx(p.i_bg));
  for (std::size_t i = 1; i < 40; ++i) REQUIRE(td[i].intensity < tb[i].intensity);
  CHECK(td.back().intensity == Approx(1.0).margin(1e-5));

  const auto diff = differential_signal(tb, td);
  CHECK(diff[10].intensity > 0.05);
  CHECK(std::abs(diff.back().intensity) < 1e-4);
}

TEST_CASE("readout intensity: bright reads brighter than dark") {
  const RateParams p;
  const Generator g = build_generator(p, Controls{1.0, false, true});
  const Trajectory bright =
      propagate_sampled(StateVector{0.92, 0.08, 0, 0, 0, 0}, g, 400e-9, 401);
  const Trajectory dark =
      propagate_sampled(StateVector{0.08, 0.92, 0, 0, 0, 0}, g, 400e-9, 401);
  CHECK(readout_intensity(bright, p, 0, 300e-9) >
        readout_intensity(dark, p, 0, 300e-9));
}

TEST_CASE("spin projection: calibration endpoints and midpoint") {
  // bright calibration pair (values are arbitrary but ordered)
  const double cal_no_pi = 1.10, cal_pi = 0.85;

  SECTION("signal equal to the calibration reads the bright endpoint") {
    CHECK(spin_projection(cal_no_pi, cal_pi, cal_no_pi, cal_pi) ==
          Approx(0.08).margin(1e-12));
  }
  SECTION("swapped signal reads the dark endpoint") {
    CHECK(spin_projection(cal_pi, cal_no_pi, cal_no_pi, cal_pi) ==
          Approx(0.92).margin(1e-12));
  }
  SECTION("zero contrast reads the midpoint") {
    CHECK(spin_projection(1.0, 1.0, cal_no_pi, cal_pi) == Approx(0.5).margin(1e-12));
  }
  SECTION("strictly decreasing in the signal contrast") {
    double prev = 2;
    for (double c = -0.3; c <= 0.3; c += 0.01) {
      // construct intensities with contrast c
      const double ms = spin_projection(1 + c, 1 - c, cal_no_pi, cal_pi);
      REQUIRE(ms < prev);
      prev = ms;
    }
  }
  SECTION("errors") {
    CHECK_THROWS_AS(spin_projection(0.0, 1.0, cal_no_pi, cal_pi), domain_error);
    CHECK_THROWS_AS(spin_projection(1.0, 1.0, 1.0, 1.0), calibration_error);
  }
}
