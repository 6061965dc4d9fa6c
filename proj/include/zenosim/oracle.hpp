#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "zenosim/errors.hpp"
#include "zenosim/model.hpp"

// Independent verification path: classical explicit Dormand-Prince 5(4)
// embedded pair with adaptive step control.  Deliberately shares nothing
// with the matrix-exponential path beyond the Generator type; the right-hand
// side and the state arithmetic are written out on plain arrays.

namespace zenosim {
namespace detail {

using Array6 = std::array<double, 6>;

inline Array6 rhs(const Generator& gen, const Array6& y) {
  Array6 dy{};
  for (int i = 0; i < 6; ++i) {
    double acc = 0;
    for (int j = 0; j < 6; ++j) acc += gen.a(i, j) * y[j];
    dy[i] = acc;
  }
  return dy;
}

}  // namespace detail

inline StateVector oracle_integrate(const StateVector& state, const Generator& gen,
                                    double dt, double tol) {
  if (!(tol >= 1e-13 && tol <= 1e-4))
    throw domain_error("oracle_integrate: tol outside [1e-13, 1e-4]");
  if (dt < 0) throw domain_error("oracle_integrate: dt must be >= 0");
  if (!state.all_finite() || !gen.a.allFinite())
    throw numeric_error("oracle_integrate: non-finite input");
  if (dt == 0) return state;

  using detail::Array6;
  // Dormand-Prince coefficients; the 5th-order weights coincide with the
  // last stage row (FSAL property, unused here for simplicity).
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                   e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                   e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  Array6 y{state.g0, state.g1, state.im_c01, state.e0, state.e1, state.s};
  double t = 0;
  // initial step from the rate scale of the generator
  double amax = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) amax = std::max(amax, std::abs(gen.a(i, j)));
  double h = (amax > 0) ? std::min(dt, 0.1 / amax) : dt;

  const double h_min = dt * 1e-14;
  std::size_t steps = 0;
  constexpr std::size_t max_steps = 50'000'000;

  while (t < dt) {
    if (++steps > max_steps)
      throw divergence_error("oracle_integrate: step budget exhausted");
    if (h < h_min) throw divergence_error("oracle_integrate: step size underflow");
    if (t + h > dt) h = dt - t;

    const Array6 k1 = detail::rhs(gen, y);
    Array6 w;
    for (int i = 0; i < 6; ++i) w[i] = y[i] + h * a21 * k1[i];
    const Array6 k2 = detail::rhs(gen, w);
    for (int i = 0; i < 6; ++i) w[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    const Array6 k3 = detail::rhs(gen, w);
    for (int i = 0; i < 6; ++i)
      w[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    const Array6 k4 = detail::rhs(gen, w);
    for (int i = 0; i < 6; ++i)
      w[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    const Array6 k5 = detail::rhs(gen, w);
    for (int i = 0; i < 6; ++i)
      w[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                         a65 * k5[i]);
    const Array6 k6 = detail::rhs(gen, w);
    Array6 y5;
    for (int i = 0; i < 6; ++i)
      y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    const Array6 k7 = detail::rhs(gen, y5);

    // error-per-unit-step control, so the accumulated error over the whole
    // interval stays at the tolerance scale
    double err = 0;
    for (int i = 0; i < 6; ++i) {
      const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                             e6 * k6[i] + e7 * k7[i]);
      const double scale =
          tol * (h / dt) * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
      err += (ei / scale) * (ei / scale);
    }
    err = std::sqrt(err / 6);

    if (err <= 1.0) {
      t += h;
      y = y5;
    }
    // effective control order is four once the per-unit-step scaling is in
    const double factor = (err > 0) ? 0.9 * std::pow(err, -0.25) : 5.0;
    h *= std::min(5.0, std::max(0.2, factor));
  }

  for (double v : y)
    if (!std::isfinite(v)) throw divergence_error("oracle_integrate: diverged");
  return {y[0], y[1], y[2], y[3], y[4], y[5]};
}

}  // namespace zenosim
