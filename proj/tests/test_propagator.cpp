#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "zenosim/model.hpp"
#include "zenosim/oracle.hpp"
#include "zenosim/propagator.hpp"
#include "test_support.hpp"

using namespace zenosim;
using Catch::Approx;

namespace {

RateParams closed_two_level(double omega, double t2 = 1e30) {
  RateParams p;
  p.rabi_omega = omega;
  p.t2_star = t2;
  p.k_exc_cw = 0;
  p.k_rad = 0;
  p.k_desh = 0;
  p.k_s = 0;
  return p;
}

double max_state_diff(const StateVector& a, const StateVector& b) {
  return (a.to_vector() - b.to_vector()).cwiseAbs().maxCoeff();
}

// Desk-derived damped two-level solution: D'' + gamma D' + Omega^2 D = 0 from
// D(0)=D0, D'(0)=0, with im = -D'/(2 Omega).
struct DampedRabi {
  double omega, gamma, d0;
  double population_diff(double t) const {
    const double wt = std::sqrt(omega * omega - gamma * gamma / 4);
    return d0 * std::exp(-gamma * t / 2) *
           (std::cos(wt * t) + gamma / (2 * wt) * std::sin(wt * t));
  }
  double coherence(double t) const {
    const double wt = std::sqrt(omega * omega - gamma * gamma / 4);
    return d0 * omega / (2 * wt) * std::exp(-gamma * t / 2) * std::sin(wt * t);
  }
};

}  // namespace

TEST_CASE("propagate: dt = 0 is the identity") {
  const RateParams p;
  const Generator g = build_generator(p, Controls{1.0, true, true});
  const StateVector x{0.3, 0.2, 0.05, 0.1, 0.15, 0.25};
  CHECK(max_state_diff(propagate(x, g, 0.0), x) == 0.0);
}

TEST_CASE("propagate: exact pi rotation in the closed two-level limit") {
  const RateParams p = closed_two_level(2 * std::numbers::pi * 4e6);
  const Generator g = build_generator(p, Controls{0, true, true});
  const StateVector out =
      propagate(StateVector{1, 0, 0, 0, 0, 0}, g, std::numbers::pi / p.rabi_omega);
  CHECK(out.g0 == Approx(0.0).margin(1e-8));
  CHECK(out.g1 == Approx(1.0).margin(1e-8));
  CHECK(out.im_c01 == Approx(0.0).margin(1e-8));
}

TEST_CASE("propagate: analytic Rabi over two periods") {
  const RateParams p = closed_two_level(2 * std::numbers::pi / 240e-9);
  const Generator g = build_generator(p, Controls{0, true, true});
  const StateVector x0{1, 0, 0, 0, 0, 0};
  for (int k = 0; k <= 96; ++k) {
    const double t = k * (4 * std::numbers::pi / p.rabi_omega) / 96;
    const StateVector x = propagate(x0, g, t);
    const double s = std::sin(p.rabi_omega * t / 2);
    REQUIRE(x.g1 == Approx(s * s).margin(1e-8));
  }
}

TEST_CASE("propagate: damped Rabi matches the closed form") {
  RateParams p = closed_two_level(2 * std::numbers::pi / 240e-9, 0.5e-6);
  const Generator g = build_generator(p, Controls{0, true, true});
  const DampedRabi ref{p.rabi_omega, 1.0 / p.t2_star, 1.0};
  const StateVector x0{1, 0, 0, 0, 0, 0};
  for (int k = 0; k <= 96; ++k) {
    const double t = k * (4 * std::numbers::pi / p.rabi_omega) / 96;
    const StateVector x = propagate(x0, g, t);
    REQUIRE(x.g0 == Approx((1 + ref.population_diff(t)) / 2).margin(1e-7));
    REQUIRE(x.g1 == Approx((1 - ref.population_diff(t)) / 2).margin(1e-7));
    REQUIRE(x.im_c01 == Approx(ref.coherence(t)).margin(1e-7));
  }
}

TEST_CASE("propagate: semigroup property") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0, 1e-6);
  for (int it = 0; it < 200; ++it) {
    const RateParams p = testing::random_params(rng);
    const Generator g = build_generator(p, testing::random_controls(rng));
    const StateVector x0{p.eta_pol, 1 - p.eta_pol, 0, 0, 0, 0};
    const double t1 = u(rng), t2 = u(rng);
    const StateVector two_step = propagate(propagate(x0, g, t1), g, t2);
    const StateVector one_step = propagate(x0, g, t1 + t2);
    REQUIRE(max_state_diff(two_step, one_step) <= 1e-10);
  }
}

TEST_CASE("propagate: conservation and positivity at reference rates") {
  const RateParams p;
  const Generator g = build_generator(p, Controls{1.0, true, true});
  StateVector x{0.92, 0.08, 0, 0, 0, 0};
  const Trajectory traj = propagate_sampled(x, g, 10e-6, 1001);
  for (const auto& st : traj.states) {
    REQUIRE(std::abs(st.population_sum() - 1.0) < 1e-9);
    REQUIRE(st.g0 > -1e-9);
    REQUIRE(st.g1 > -1e-9);
    REQUIRE(st.e0 > -1e-9);
    REQUIRE(st.e1 > -1e-9);
    REQUIRE(st.s > -1e-9);
    REQUIRE(std::abs(st.im_c01) <= (st.g0 + st.g1) / 2 + 1e-9);
  }
}

TEST_CASE("propagate_sampled: endpoints and consistency with propagate") {
  const RateParams p;
  const Generator g = build_generator(p, Controls{1.0, false, true});
  const StateVector x0{0.92, 0.08, 0, 0, 0, 0};

  SECTION("two samples give exactly the endpoints") {
    const Trajectory t = propagate_sampled(x0, g, 1e-6, 2);
    REQUIRE(t.size() == 2);
    CHECK(t.times[0] == 0.0);
    CHECK(t.times[1] == 1e-6);
    CHECK(max_state_diff(t.states[0], x0) == 0.0);
    CHECK(max_state_diff(t.states[1], propagate(x0, g, 1e-6)) <= 1e-12);
  }

  SECTION("interior samples match direct propagation") {
    const int n = 301;
    const Trajectory t = propagate_sampled(x0, g, 2e-6, n);
    for (int k = 0; k < n; k += 30) {
      const StateVector direct = propagate(x0, g, t.times[k]);
      REQUIRE(max_state_diff(t.states[k], direct) <= 1e-10);
    }
  }

  CHECK_THROWS_AS(propagate_sampled(x0, g, 1e-6, 1), domain_error);
}

// --------------------------------------------------------------------------
// oracle path
// --------------------------------------------------------------------------

TEST_CASE("oracle: zero generator is the identity") {
  const Generator g;  // all zero
  const StateVector x{0.2, 0.3, 0.1, 0.1, 0.2, 0.2};
  CHECK(max_state_diff(oracle_integrate(x, g, 1e-6, 1e-10), x) <= 1e-12);
}

TEST_CASE("oracle: pi/2 pulse reaches the analytic Bloch point") {
  const RateParams p = closed_two_level(2 * std::numbers::pi / 240e-9);
  const Generator g = build_generator(p, Controls{0, true, true});
  const double tol = 1e-10;
  const StateVector x = oracle_integrate(StateVector{1, 0, 0, 0, 0, 0}, g,
                                         std::numbers::pi / (2 * p.rabi_omega), tol);
  CHECK(x.g0 == Approx(0.5).margin(1e-8));
  CHECK(x.g1 == Approx(0.5).margin(1e-8));
  CHECK(x.im_c01 == Approx(0.5).margin(1e-8));
}

TEST_CASE("oracle: agreement with the matrix-exponential path") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0, 2e-6);
  const double tol = 1e-10;
  for (int it = 0; it < 100; ++it) {
    const RateParams p = testing::random_params(rng);
    const Generator g = build_generator(p, testing::random_controls(rng));
    const StateVector x0{p.eta_pol, 1 - p.eta_pol, 0, 0, 0, 0};
    const double dt = u(rng);
    const StateVector a = propagate(x0, g, dt);
    const StateVector b = oracle_integrate(x0, g, dt, tol);
    REQUIRE(max_state_diff(a, b) <= std::max(10 * tol, 1e-9));
  }
}

TEST_CASE("oracle: reference laser segment cross-check") {
  const RateParams p;
  const Generator g = build_generator(p, Controls{1.0, false, true});
  const StateVector x0{1, 0, 0, 0, 0, 0};
  const StateVector a = propagate(x0, g, 1e-6);
  const StateVector b = oracle_integrate(x0, g, 1e-6, 1e-10);
  CHECK(max_state_diff(a, b) <= 1e-7);
}

TEST_CASE("oracle: tolerance domain") {
  const Generator g;
  const StateVector x{1, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(oracle_integrate(x, g, 1e-6, 1e-14), domain_error);
  CHECK_THROWS_AS(oracle_integrate(x, g, 1e-6, 1e-3), domain_error);
}
