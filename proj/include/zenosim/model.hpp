#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <utility>

#include "zenosim/errors.hpp"

// Ground-state spin model of a single NV center under piecewise-constant
// laser and microwave controls.  The state is the six-component vector
// (G0, G1, Im C01, E0, E1, S): five level populations plus the imaginary
// part of the ground-state spin coherence.  All rates are in 1/s, times in
// seconds, angles in radians.

namespace zenosim {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

// Transition rates and phenomenological parameters of one NV center.
struct RateParams {
  double rabi_omega = 2.0 * std::numbers::pi / 240e-9;  // MW Rabi angular frequency, rad/s
  double t2_star = 0.5e-6;                              // inhomogeneous dephasing time, s
  double k_exc_cw = 1.0 / 30.5e-9;  // excitation rate at reference cw laser power, 1/s
  double k_rad = 1.0 / 13e-9;       // radiative decay rate, 1/s
  double k_desh = 1.0 / 220e-9;     // singlet deshelving rate (S -> G0), 1/s
  double k_s = 1.0 / 15.4e-9;       // ISC shelving reference rate, 1/s
  double theta = 12.4 * std::numbers::pi / 180.0;  // strain spin-mixing angle, rad
  double i_bg = 0.2;                               // background fraction of the signal
  double eta_pol = 0.92;                           // optical polarization efficiency

  void validate() const {
    const bool rates_ok = rabi_omega >= 0 && k_exc_cw >= 0 && k_rad >= 0 &&
                          k_desh >= 0 && k_s >= 0;
    if (!rates_ok) throw domain_error("RateParams: rates must be >= 0");
    if (!(t2_star > 0)) throw domain_error("RateParams: t2_star must be > 0");
    if (!(theta >= 0 && theta <= std::numbers::pi / 2))
      throw domain_error("RateParams: theta outside [0, pi/2]");
    if (!(i_bg >= 0 && i_bg < 1)) throw domain_error("RateParams: i_bg outside [0, 1)");
    if (!(eta_pol >= 0 && eta_pol <= 1))
      throw domain_error("RateParams: eta_pol outside [0, 1]");
  }
};

// The canonical parameter set used throughout tests and as CLI default.
inline RateParams default_params() { return RateParams{}; }

// Per-segment control settings.
struct Controls {
  double laser_fraction = 0.0;  // scales k_exc_cw linearly, in [0, 1]
  bool mw_on = false;           // gates the Rabi drive
  bool zeno_enabled = true;     // k_exc contributes to coherence damping

  void validate() const {
    if (!(laser_fraction >= 0 && laser_fraction <= 1))
      throw domain_error("Controls: laser_fraction outside [0, 1]");
  }
};

struct StateVector {
  double g0 = 0;      // m_s = 0 ground population
  double g1 = 0;      // m_s = 1 ground population
  double im_c01 = 0;  // Im of the ground-state spin coherence
  double e0 = 0;      // predominantly m_s = 0 excited population
  double e1 = 0;      // predominantly m_s = 1 excited population
  double s = 0;       // singlet (shelving) population

  double population_sum() const { return g0 + g1 + e0 + e1 + s; }

  bool is_physical(double tol = 1e-9) const {
    const double lo = -tol, hi = 1 + tol;
    const bool pops_ok = g0 >= lo && g0 <= hi && g1 >= lo && g1 <= hi &&
                         e0 >= lo && e0 <= hi && e1 >= lo && e1 <= hi &&
                         s >= lo && s <= hi;
    return pops_ok && std::abs(population_sum() - 1.0) <= tol &&
           std::abs(im_c01) <= (g0 + g1) / 2 + tol;
  }

  bool all_finite() const {
    return std::isfinite(g0) && std::isfinite(g1) && std::isfinite(im_c01) &&
           std::isfinite(e0) && std::isfinite(e1) && std::isfinite(s);
  }

  Vector6d to_vector() const {
    Vector6d v;
    v << g0, g1, im_c01, e0, e1, s;
    return v;
  }

  static StateVector from_vector(const Vector6d& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
};

// 6x6 real generator A of dx/dt = A x for one control setting.
struct Generator {
  Matrix6d a = Matrix6d::Zero();
};

// alpha = cos^2(theta) scales allowed transitions, beta = 1 - alpha the
// formally forbidden ones; the pair sums to one by construction.
inline std::pair<double, double> mixing_coefficients(double theta) {
  if (!(theta >= 0 && theta <= std::numbers::pi / 2))
    throw domain_error("mixing_coefficients: theta outside [0, pi/2]");
  const double c = std::cos(theta);
  const double alpha = c * c;
  return {alpha, 1.0 - alpha};
}

// Builds the trace-conserving generator.  Deshelving feeds G0 only, ISC loss
// sits on the excited-state diagonals, and the coherence damps at
// gamma = 1/T2* + k_exc (the k_exc term is the measurement back-action and
// is dropped when the Zeno toggle is off).
inline Generator build_generator(const RateParams& p, const Controls& c) {
  p.validate();
  c.validate();
  const auto [alpha, beta] = mixing_coefficients(p.theta);
  const double k_exc = c.laser_fraction * p.k_exc_cw;
  const double omega = c.mw_on ? p.rabi_omega : 0.0;
  const double gamma = 1.0 / p.t2_star + (c.zeno_enabled ? k_exc : 0.0);

  Generator gen;
  Matrix6d& a = gen.a;
  a(0, 0) = -k_exc;
  a(0, 2) = -omega;
  a(0, 3) = alpha * p.k_rad;
  a(0, 4) = beta * p.k_rad;
  a(0, 5) = p.k_desh;

  a(1, 1) = -k_exc;
  a(1, 2) = omega;
  a(1, 3) = beta * p.k_rad;
  a(1, 4) = alpha * p.k_rad;

  a(2, 0) = omega / 2;
  a(2, 1) = -omega / 2;
  a(2, 2) = -gamma;

  a(3, 0) = alpha * k_exc;
  a(3, 1) = beta * k_exc;
  a(3, 3) = -(p.k_rad + beta * p.k_s);

  a(4, 0) = beta * k_exc;
  a(4, 1) = alpha * k_exc;
  a(4, 4) = -(p.k_rad + alpha * p.k_s);

  a(5, 3) = beta * p.k_s;
  a(5, 4) = alpha * p.k_s;
  a(5, 5) = -p.k_desh;
  return gen;
}

}  // namespace zenosim
