#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "zenosim/errors.hpp"
#include "zenosim/model.hpp"
#include "zenosim/propagator.hpp"

// Measured quantities: normalized fluorescence intensity, differential
// signal, window-averaged readout, and the contrast-calibrated spin
// projection <m_s>.

namespace zenosim {

struct IntensitySample {
  double time = 0;       // s
  double intensity = 0;  // normalized to the full-power cw steady state
};

// Stationary state of dx/dt = A x with populations summing to one.  The
// generator conserves population, so the system is solved with the first
// row replaced by the normalization constraint.
inline StateVector steady_state(const RateParams& p, const Controls& c) {
  const Generator gen = build_generator(p, c);
  Matrix6d k = gen.a;
  k.row(0) << 1, 1, 0, 1, 1, 1;
  Vector6d b = Vector6d::Zero();
  b[0] = 1;
  Eigen::FullPivLU<Matrix6d> lu(k);
  if (!lu.isInvertible())
    throw domain_error("steady_state: stationary state not unique");
  return StateVector::from_vector(lu.solve(b));
}

inline StateVector cw_steady_state(const RateParams& p) {
  return steady_state(p, Controls{1.0, false, true});
}

// Steady-state photon rate k_rad * (e0 + e1) under the full cw laser; the
// normalization constant for all intensities.
inline double intensity_norm(const RateParams& p) {
  const StateVector ss = cw_steady_state(p);
  return p.k_rad * (ss.e0 + ss.e1);
}

// I = (1 - i_bg) * k_rad * (e0 + e1) / norm + i_bg
inline double instantaneous_intensity(const StateVector& x, const RateParams& p,
                                      double norm) {
  if (!(norm > 0)) throw domain_error("instantaneous_intensity: norm must be > 0");
  return (1.0 - p.i_bg) * p.k_rad * (x.e0 + x.e1) / norm + p.i_bg;
}

inline std::vector<IntensitySample> differential_signal(
    const std::vector<IntensitySample>& trace_bright,
    const std::vector<IntensitySample>& trace_dark) {
  if (trace_bright.size() != trace_dark.size())
    throw domain_error("differential_signal: trace lengths differ");
  std::vector<IntensitySample> out;
  out.reserve(trace_bright.size());
  for (std::size_t i = 0; i < trace_bright.size(); ++i) {
    if (trace_bright[i].time != trace_dark[i].time)
      throw domain_error("differential_signal: time grids differ");
    out.push_back({trace_bright[i].time,
                   trace_bright[i].intensity - trace_dark[i].intensity});
  }
  return out;
}

namespace detail {

// Linear interpolation of the sampled intensity at time t.
inline double intensity_at(const Trajectory& traj, const RateParams& p, double norm,
                           double t) {
  const auto& ts = traj.times;
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  if (it == ts.end()) return instantaneous_intensity(traj.states.back(), p, norm);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  if (hi == 0 || ts[hi] == t)
    return instantaneous_intensity(traj.states[hi], p, norm);
  const std::size_t lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  const double a = instantaneous_intensity(traj.states[lo], p, norm);
  const double b = instantaneous_intensity(traj.states[hi], p, norm);
  return a + w * (b - a);
}

}  // namespace detail

// Time average of the intensity over [window_start, window_start+window_len],
// trapezoidal on the trajectory samples (linear interpolation at the window
// edges).  A zero-length window degenerates to the instantaneous value.
inline double readout_intensity(const Trajectory& traj, const RateParams& p,
                                double window_start, double window_len) {
  if (traj.size() < 2) throw domain_error("readout_intensity: trajectory too short");
  const double t0 = window_start, t1 = window_start + window_len;
  if (window_len < 0 || t0 < traj.times.front() - 1e-15 ||
      t1 > traj.times.back() + 1e-15)
    throw domain_error("readout_intensity: window outside trajectory span");
  const double norm = intensity_norm(p);
  if (window_len == 0) return detail::intensity_at(traj, p, norm, t0);

  double acc = 0;
  double t_prev = t0;
  double i_prev = detail::intensity_at(traj, p, norm, t0);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t <= t0) continue;
    if (t >= t1) break;
    const double i = instantaneous_intensity(traj.states[k], p, norm);
    acc += 0.5 * (i_prev + i) * (t - t_prev);
    t_prev = t;
    i_prev = i;
  }
  const double i_end = detail::intensity_at(traj, p, norm, t1);
  acc += 0.5 * (i_prev + i_end) * (t1 - t_prev);
  return acc / window_len;
}

inline double contrast(double a, double b) { return (a - b) / (a + b); }

// Affine map from the measured contrast (intensity with vs without the final
// pi-pulse) to <m_s>, pinned to the preparation endpoints 1-eta_pol and
// eta_pol.  The dark calibration contrast is the bright one with roles
// swapped, C_d = -C_b.
inline double spin_projection(double i_signal_no_pi, double i_signal_pi,
                              double i_cal_bright_no_pi, double i_cal_bright_pi,
                              double eta_pol = 0.92) {
  if (!(i_signal_no_pi > 0 && i_signal_pi > 0 && i_cal_bright_no_pi > 0 &&
        i_cal_bright_pi > 0))
    throw domain_error("spin_projection: intensities must be > 0");
  const double c_b = contrast(i_cal_bright_no_pi, i_cal_bright_pi);
  const double c_d = -c_b;
  if (c_b == c_d) throw calibration_error("spin_projection: degenerate calibration");
  const double c_sig = contrast(i_signal_no_pi, i_signal_pi);
  return (1.0 - eta_pol) + (2.0 * eta_pol - 1.0) * (c_b - c_sig) / (c_b - c_d);
}

}  // namespace zenosim
