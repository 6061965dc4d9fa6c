#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "zenosim/errors.hpp"
#include "zenosim/model.hpp"
#include "zenosim/observables.hpp"
#include "zenosim/propagator.hpp"

// Composition of piecewise-constant segments into the experimental
// protocols: laser initialization, MW pi-pulses, the short projective
// (Zeno) laser pulse at delay tau, and the fluorescence readout.

namespace zenosim {

struct Segment {
  Controls controls;
  double duration = 0;  // s
  int sample_hint = 0;  // trajectory samples for this segment (0 = endpoints only)
};

struct PulseSequence {
  std::vector<Segment> segments;

  double total_duration() const {
    double t = 0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }

  void validate() const {
    if (segments.empty()) throw config_error("PulseSequence: empty");
    for (const auto& s : segments) {
      if (!(s.duration >= 0)) throw config_error("PulseSequence: negative duration");
      s.controls.validate();
    }
  }
};

// Bright state after optical pumping; the preparation phase is random, so
// the coherence averages to zero.
inline StateVector prepare_bright(const RateParams& p) {
  p.validate();
  return {p.eta_pol, 1.0 - p.eta_pol, 0, 0, 0, 0};
}

// Dark state: bright preparation followed by an ideal population swap.
inline StateVector prepare_dark(const RateParams& p) {
  p.validate();
  return {1.0 - p.eta_pol, p.eta_pol, 0, 0, 0, 0};
}

// Concatenated propagation through all segments; the trajectory is
// continuous at segment boundaries (boundary points are not duplicated).
inline Trajectory run_sequence(const RateParams& p, const PulseSequence& seq,
                               const StateVector& initial) {
  seq.validate();
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(initial);
  double t0 = 0;
  for (const auto& seg : seq.segments) {
    if (seg.duration == 0) continue;
    const Generator gen = build_generator(p, seg.controls);
    const int n = std::max(2, seg.sample_hint);
    const Trajectory piece = propagate_sampled(traj.states.back(), gen, seg.duration, n);
    for (std::size_t k = 1; k < piece.size(); ++k) {
      traj.times.push_back(t0 + piece.times[k]);
      traj.states.push_back(piece.states[k]);
    }
    t0 += seg.duration;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Zeno protocol
// ---------------------------------------------------------------------------

struct ZenoProtocolConfig {
  double mw_pi_duration = 120e-9;          // central/prep/final pi-pulse length, s
  double zeno_pulse_duration = 12e-9;      // projective laser pulse length, s
  double zeno_pulse_power_fraction = 1.0;  // pulse power relative to cw
  double tau = 0;                          // pulse center minus MW-pulse center, s
  double init_laser_duration = 5e-6;       // polarizing cw laser, s
  double relax_wait = 1e-6;                // dark relaxation after the laser, s
  double pre_gap = 300e-9;                 // idle span before the MW pulse, s
  double readout_delay = 300e-9;           // MW end to readout events, s
  double readout_window = 300e-9;          // averaged fluorescence window, s
  double readout_laser_margin = 100e-9;    // extra readout laser beyond the window, s
  bool initial_dark = false;               // prep pi-pulse before the protocol
  bool final_pi = false;                   // pi-pulse before readout
  bool zeno_enabled = true;                // k_exc contributes to coherence damping

  void validate() const {
    const bool ok = mw_pi_duration >= 0 && zeno_pulse_duration >= 0 &&
                    zeno_pulse_power_fraction >= 0 && zeno_pulse_power_fraction <= 1 &&
                    init_laser_duration >= 0 && relax_wait >= 0 && pre_gap >= 0 &&
                    readout_delay >= 0 && readout_window > 0 && readout_laser_margin >= 0;
    if (!ok) throw config_error("ZenoProtocolConfig: invalid durations");
  }
};

// Sequence plus the timing anchors needed to evaluate it.
struct ZenoTimeline {
  PulseSequence sequence;
  double mw_center = 0;      // absolute center of the central MW pulse, s
  double readout_start = 0;  // absolute start of the readout laser, s
};

namespace detail {

struct Interval {
  double t0, t1;
  Controls controls;
};

// Splits the base timeline at the pulse edges and raises the laser power
// inside the pulse; overlap with MW segments yields both controls active,
// overlap with a laser segment takes the stronger power.
inline std::vector<Interval> overlay_laser(const std::vector<Interval>& base,
                                           double t0, double t1, double power) {
  std::vector<Interval> out;
  for (const auto& iv : base) {
    const double c0 = std::clamp(t0, iv.t0, iv.t1);
    const double c1 = std::clamp(t1, iv.t0, iv.t1);
    std::set<double> cuts{iv.t0, iv.t1, c0, c1};
    double prev = iv.t0;
    for (double cut : cuts) {
      if (cut <= prev) continue;
      Interval piece{prev, cut, iv.controls};
      if (prev >= t0 && cut <= t1)
        piece.controls.laser_fraction =
            std::max(piece.controls.laser_fraction, power);
      out.push_back(piece);
      prev = cut;
    }
  }
  return out;
}

inline int dense_hint(double duration) {
  return std::max(2, static_cast<int>(std::llround(duration / 1e-9)) + 1);
}

}  // namespace detail

// Fixed protocol timeline:
//   [init laser] [relax] [prep pi]? [pre gap] [MW pi] [readout delay]
//   [final pi]? [readout laser]
// The Zeno pulse is inserted by splitting whatever segments it overlaps, so
// the timing of everything else is independent of tau.
inline ZenoTimeline build_zeno_timeline(const ZenoProtocolConfig& cfg) {
  cfg.validate();
  using detail::Interval;
  std::vector<Interval> base;
  double t = 0;
  const auto add = [&](double dur, const Controls& c) {
    if (dur > 0) {
      base.push_back({t, t + dur, c});
      t += dur;
    }
  };
  const Controls off{0, false, cfg.zeno_enabled};
  const Controls laser{1.0, false, cfg.zeno_enabled};
  const Controls mw{0, true, cfg.zeno_enabled};

  add(cfg.init_laser_duration, laser);
  add(cfg.relax_wait, off);
  if (cfg.initial_dark) add(cfg.mw_pi_duration, mw);
  add(cfg.pre_gap, off);
  const double mw_center = t + cfg.mw_pi_duration / 2;
  add(cfg.mw_pi_duration, mw);
  add(cfg.readout_delay, off);
  if (cfg.final_pi) add(cfg.mw_pi_duration, mw);
  const double readout_start = t;
  add(cfg.readout_window + cfg.readout_laser_margin, laser);

  if (cfg.zeno_pulse_power_fraction > 0 && cfg.zeno_pulse_duration > 0) {
    const double p0 = mw_center + cfg.tau - cfg.zeno_pulse_duration / 2;
    const double p1 = mw_center + cfg.tau + cfg.zeno_pulse_duration / 2;
    if (p0 < 0 || p1 > t)
      throw config_error("build_zeno_timeline: zeno pulse outside the simulated span");
    base = detail::overlay_laser(base, p0, p1, cfg.zeno_pulse_power_fraction);
  }

  ZenoTimeline tl;
  tl.mw_center = mw_center;
  tl.readout_start = readout_start;
  for (const auto& iv : base) {
    Segment seg{iv.controls, iv.t1 - iv.t0, 9};
    if (iv.controls.laser_fraction > 0 && iv.t0 >= readout_start - 1e-15)
      seg.sample_hint = detail::dense_hint(seg.duration);
    tl.sequence.segments.push_back(seg);
  }
  return tl;
}

inline PulseSequence build_zeno_sequence(const ZenoProtocolConfig& cfg) {
  return build_zeno_timeline(cfg).sequence;
}

namespace detail {

// Readout stage alone, applied to an already-prepared state:
// [readout delay] [final pi]? [readout laser].
inline double readout_stage_intensity(const RateParams& p, const StateVector& state,
                                      const ZenoProtocolConfig& cfg, bool final_pi) {
  PulseSequence seq;
  const Controls off{0, false, cfg.zeno_enabled};
  seq.segments.push_back({off, cfg.readout_delay, 9});
  if (final_pi) seq.segments.push_back({Controls{0, true, cfg.zeno_enabled},
                                        cfg.mw_pi_duration, 9});
  const double laser_dur = cfg.readout_window + cfg.readout_laser_margin;
  seq.segments.push_back({Controls{1.0, false, cfg.zeno_enabled}, laser_dur,
                          dense_hint(laser_dur)});
  const double start = cfg.readout_delay + (final_pi ? cfg.mw_pi_duration : 0.0);
  const Trajectory traj = run_sequence(p, seq, state);
  return readout_intensity(traj, p, start, cfg.readout_window);
}

// Full protocol from an unpolarized ground mixture; the init laser does the
// state preparation.
inline double zeno_protocol_intensity(const RateParams& p, ZenoProtocolConfig cfg,
                                      bool final_pi) {
  cfg.final_pi = final_pi;
  const ZenoTimeline tl = build_zeno_timeline(cfg);
  const StateVector mixed{0.5, 0.5, 0, 0, 0, 0};
  const Trajectory traj = run_sequence(p, tl.sequence, mixed);
  return readout_intensity(traj, p, tl.readout_start, cfg.readout_window);
}

}  // namespace detail

// Bright-preparation calibration contrast C_b for the readout geometry of cfg.
inline double calibration_contrast(const RateParams& p, const ZenoProtocolConfig& cfg) {
  const StateVector bright = prepare_bright(p);
  const double i_no_pi = detail::readout_stage_intensity(p, bright, cfg, false);
  const double i_pi = detail::readout_stage_intensity(p, bright, cfg, true);
  return contrast(i_no_pi, i_pi);
}

// <m_s> of an arbitrary prepared state, read out with the geometry of cfg.
inline double state_spin_projection(const RateParams& p, const StateVector& state,
                                    const ZenoProtocolConfig& cfg) {
  const StateVector bright = prepare_bright(p);
  const double cal_no_pi = detail::readout_stage_intensity(p, bright, cfg, false);
  const double cal_pi = detail::readout_stage_intensity(p, bright, cfg, true);
  const double i_no_pi = detail::readout_stage_intensity(p, state, cfg, false);
  const double i_pi = detail::readout_stage_intensity(p, state, cfg, true);
  return spin_projection(i_no_pi, i_pi, cal_no_pi, cal_pi, p.eta_pol);
}

// Rabi experiment: bright preparation, MW drive of the given duration,
// contrast readout.
inline std::vector<std::pair<double, double>> simulate_rabi(
    const RateParams& p, const std::vector<double>& mw_durations,
    const ZenoProtocolConfig& cfg = {}) {
  const StateVector bright = prepare_bright(p);
  const double cal_no_pi = detail::readout_stage_intensity(p, bright, cfg, false);
  const double cal_pi = detail::readout_stage_intensity(p, bright, cfg, true);
  const Generator mw = build_generator(p, Controls{0, true, cfg.zeno_enabled});

  std::vector<std::pair<double, double>> out;
  out.reserve(mw_durations.size());
  for (double dur : mw_durations) {
    if (dur < 0) throw domain_error("simulate_rabi: negative duration");
    const StateVector st = propagate(bright, mw, dur);
    const double i_no_pi = detail::readout_stage_intensity(p, st, cfg, false);
    const double i_pi = detail::readout_stage_intensity(p, st, cfg, true);
    out.emplace_back(dur,
                     spin_projection(i_no_pi, i_pi, cal_no_pi, cal_pi, p.eta_pol));
  }
  return out;
}

// tau sweep of the Zeno protocol; each point runs the protocol with and
// without the final pi-pulse and converts the contrast to <m_s>.  The
// calibration is tau-independent and computed once.
inline std::vector<std::pair<double, double>> simulate_zeno_sweep(
    const RateParams& p, const ZenoProtocolConfig& cfg_base,
    const std::vector<double>& taus) {
  const StateVector bright = prepare_bright(p);
  const double cal_no_pi = detail::readout_stage_intensity(p, bright, cfg_base, false);
  const double cal_pi = detail::readout_stage_intensity(p, bright, cfg_base, true);

  std::vector<std::pair<double, double>> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    ZenoProtocolConfig cfg = cfg_base;
    cfg.tau = tau;
    const double i_no_pi = detail::zeno_protocol_intensity(p, cfg, false);
    const double i_pi = detail::zeno_protocol_intensity(p, cfg, true);
    out.emplace_back(tau,
                     spin_projection(i_no_pi, i_pi, cal_no_pi, cal_pi, p.eta_pol));
  }
  return out;
}

// At-least-one-excitation probability of a laser pulse on a ground-manifold
// state: p = 1 - exp(-N) with N the expected number of excitation events.
// N = k_exc * integral of (g0 + g1) over the pulse, evaluated exactly via the
// augmented-exponential quadrature.
inline double excitation_probability(const RateParams& p, double pulse_duration,
                                     double power_fraction) {
  if (pulse_duration < 0)
    throw domain_error("excitation_probability: negative duration");
  const Generator gen = build_generator(p, Controls{power_fraction, false, true});
  const Vector6d x0 = prepare_bright(p).to_vector();

  Eigen::Matrix<double, 7, 7> m = Eigen::Matrix<double, 7, 7>::Zero();
  m.topLeftCorner<6, 6>() = gen.a;
  m.topRightCorner<6, 1>() = x0;
  const Eigen::Matrix<double, 7, 7> e = (m * pulse_duration).exp();
  const Vector6d integral = e.topRightCorner<6, 1>();  // int_0^T exp(As) x0 ds

  const double n_exc = power_fraction * p.k_exc_cw * (integral[0] + integral[1]);
  return 1.0 - std::exp(-n_exc);
}

}  // namespace zenosim
