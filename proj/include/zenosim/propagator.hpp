#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include <vector>

#include "zenosim/errors.hpp"
#include "zenosim/model.hpp"

// Production propagation path: the piecewise-constant dynamics is solved
// exactly via the matrix exponential (Eigen's scaling-and-squaring Pade
// implementation).  The independent verification path lives in oracle.hpp.

namespace zenosim {

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;

  std::size_t size() const { return times.size(); }
  const StateVector& back() const { return states.back(); }
};

// exp(A dt) for one segment.
inline Matrix6d step_matrix(const Generator& gen, double dt) {
  if (!gen.a.allFinite() || !std::isfinite(dt))
    throw numeric_error("step_matrix: non-finite input");
  if (dt < 0) throw domain_error("step_matrix: dt must be >= 0");
  return (gen.a * dt).exp();
}

inline StateVector propagate(const StateVector& state, const Generator& gen, double dt) {
  if (!state.all_finite()) throw numeric_error("propagate: non-finite state");
  const Vector6d x = step_matrix(gen, dt) * state.to_vector();
  if (!x.allFinite()) throw numeric_error("propagate: non-finite result");
  return StateVector::from_vector(x);
}

// n_samples equally spaced points over [0, dt], both endpoints included.
// One exponential of the sub-step is reused for all samples.
inline Trajectory propagate_sampled(const StateVector& state, const Generator& gen,
                                    double dt, int n_samples) {
  if (n_samples < 2) throw domain_error("propagate_sampled: n_samples must be >= 2");
  if (!state.all_finite()) throw numeric_error("propagate_sampled: non-finite state");
  const double h = dt / (n_samples - 1);
  const Matrix6d step = step_matrix(gen, h);

  Trajectory traj;
  traj.times.reserve(n_samples);
  traj.states.reserve(n_samples);
  Vector6d x = state.to_vector();
  traj.times.push_back(0.0);
  traj.states.push_back(state);
  for (int k = 1; k < n_samples; ++k) {
    x = step * x;
    traj.times.push_back(k * h);
    traj.states.push_back(StateVector::from_vector(x));
  }
  if (!traj.states.back().all_finite())
    throw numeric_error("propagate_sampled: non-finite result");
  return traj;
}

}  // namespace zenosim
