#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "zenosim/errors.hpp"
#include "zenosim/model.hpp"
#include "zenosim/observables.hpp"
#include "zenosim/propagator.hpp"
#include "zenosim/sequence.hpp"

// Parameter estimation from fluorescence traces: damped (Levenberg-style)
// nonlinear least squares with a central-difference Jacobian, box bounds by
// projection, and one-standard-deviation confidence intervals from
// sigma^2 (J^T J)^-1.

namespace zenosim {

enum class Protocol {
  transient_bright,  // bright preparation, cw laser switched on over the grid
  transient_dark,    // dark preparation, cw laser switched on
  lifetime,          // optically excited state, laser off (radiative decay)
};

struct ProtocolSpec {
  Protocol kind = Protocol::transient_bright;
  double laser_fraction = 1.0;
};

struct Dataset {
  ProtocolSpec protocol;
  std::vector<double> times;   // strictly increasing, s
  std::vector<double> values;  // normalized intensities
  double noise_scale = 1.0;    // residual weight (relative noise level)
};

// --------------------------------------------------------------------------
// Named access to RateParams fields
// --------------------------------------------------------------------------

inline double RateParams::* param_member(const std::string& name) {
  static const std::map<std::string, double RateParams::*> table = {
      {"rabi_omega", &RateParams::rabi_omega}, {"omega", &RateParams::rabi_omega},
      {"t2_star", &RateParams::t2_star},       {"k_exc_cw", &RateParams::k_exc_cw},
      {"k_exc", &RateParams::k_exc_cw},        {"k_rad", &RateParams::k_rad},
      {"k_desh", &RateParams::k_desh},         {"k_s", &RateParams::k_s},
      {"theta", &RateParams::theta},           {"i_bg", &RateParams::i_bg},
      {"eta_pol", &RateParams::eta_pol}};
  const auto it = table.find(name);
  if (it == table.end()) throw domain_error("unknown parameter name: " + name);
  return it->second;
}

struct ParamBounds {
  double lo = 0;
  double hi = 0;
};

inline ParamBounds default_bounds(const std::string& name) {
  if (name == "theta") return {0.0, std::numbers::pi / 2};
  if (name == "i_bg") return {0.0, 0.99};
  if (name == "eta_pol") return {0.0, 1.0};
  if (name == "t2_star") return {1e-9, 1.0};
  if (name == "k_exc_cw" || name == "k_exc") return {1e3, 1e10};
  return {0.0, 1e10};  // remaining rates / omega
}

struct FitProblem {
  std::vector<Dataset> datasets;
  std::vector<std::string> free_params;
  std::map<std::string, ParamBounds> bounds;  // per free param; defaults otherwise
  RateParams initial_guess;

  ParamBounds bounds_for(const std::string& name) const {
    const auto it = bounds.find(name);
    return it != bounds.end() ? it->second : default_bounds(name);
  }

  void validate() const {
    if (datasets.empty()) throw config_error("FitProblem: no datasets");
    if (free_params.empty()) throw config_error("FitProblem: no free parameters");
    for (const auto& ds : datasets) {
      if (ds.times.size() != ds.values.size() || ds.times.size() < 2)
        throw config_error("FitProblem: bad dataset shape");
      for (std::size_t i = 1; i < ds.times.size(); ++i)
        if (!(ds.times[i] > ds.times[i - 1]))
          throw config_error("FitProblem: time grid not strictly increasing");
      if (!(ds.noise_scale > 0))
        throw config_error("FitProblem: noise_scale must be > 0");
    }
    initial_guess.validate();
    for (const auto& name : free_params) {
      const ParamBounds b = bounds_for(name);
      const double v = initial_guess.*param_member(name);
      if (!(v >= b.lo && v <= b.hi))
        throw config_error("FitProblem: initial guess outside bounds for " + name);
    }
  }
};

struct FitResult {
  RateParams estimate;
  double residual_norm = 0;
  Eigen::MatrixXd covariance;  // over free params, in their natural units
  Eigen::VectorXd confidence;  // one-standard-deviation half-widths
  int iterations = 0;
  bool converged = false;
};

// --------------------------------------------------------------------------
// Model evaluation
// --------------------------------------------------------------------------

namespace detail {

inline StateVector protocol_initial_state(const RateParams& p, const ProtocolSpec& ps) {
  switch (ps.kind) {
    case Protocol::transient_bright:
      return prepare_bright(p);
    case Protocol::transient_dark:
      return prepare_dark(p);
    case Protocol::lifetime: {
      // one optical excitation of the bright state, spin mixing included
      const auto [alpha, beta] = mixing_coefficients(p.theta);
      const StateVector g = prepare_bright(p);
      return {0, 0, 0, alpha * g.g0 + beta * g.g1, beta * g.g0 + alpha * g.g1, 0};
    }
  }
  throw domain_error("protocol_initial_state: unknown protocol");
}

inline Controls protocol_controls(const ProtocolSpec& ps) {
  const double laser = ps.kind == Protocol::lifetime ? 0.0 : ps.laser_fraction;
  return Controls{laser, false, true};
}

}  // namespace detail

// Normalized intensity of the protocol at the given sample times.
inline Eigen::VectorXd model_curve(const RateParams& p, const ProtocolSpec& ps,
                                   const std::vector<double>& times) {
  const double norm = intensity_norm(p);
  const Generator gen = build_generator(p, detail::protocol_controls(ps));
  StateVector x = detail::protocol_initial_state(p, ps);

  Eigen::VectorXd out(times.size());
  double t = 0;
  double dt_cached = -1;
  Matrix6d step;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double dt = times[i] - t;
    if (dt < 0) throw domain_error("model_curve: times must be non-decreasing");
    if (dt > 0) {
      if (dt != dt_cached) {
        step = step_matrix(gen, dt);
        dt_cached = dt;
      }
      x = StateVector::from_vector(step * x.to_vector());
      t = times[i];
    }
    out[i] = instantaneous_intensity(x, p, norm);
  }
  return out;
}

// (model - data) / noise_scale, datasets concatenated in order.
inline Eigen::VectorXd residuals(const FitProblem& problem, const RateParams& candidate) {
  problem.validate();
  candidate.validate();
  std::size_t total = 0;
  for (const auto& ds : problem.datasets) total += ds.times.size();
  Eigen::VectorXd r(total);
  std::size_t at = 0;
  for (const auto& ds : problem.datasets) {
    const Eigen::VectorXd m = model_curve(candidate, ds.protocol, ds.times);
    for (std::size_t i = 0; i < ds.times.size(); ++i)
      r[at + i] = (m[i] - ds.values[i]) / ds.noise_scale;
    at += ds.times.size();
  }
  return r;
}

// Seeded synthetic dataset with multiplicative Gaussian noise.
inline Dataset synthesize_dataset(const RateParams& p, const ProtocolSpec& ps,
                                  const std::vector<double>& grid, double noise_scale,
                                  std::uint64_t seed) {
  Dataset ds;
  ds.protocol = ps;
  ds.times = grid;
  ds.noise_scale = noise_scale > 0 ? noise_scale : 1.0;
  const Eigen::VectorXd m = model_curve(p, ps, grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ds.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    ds.values[i] = m[i] * (1.0 + noise_scale * gauss(rng));
  return ds;
}

// --------------------------------------------------------------------------
// Levenberg-Marquardt
// --------------------------------------------------------------------------

namespace detail {

inline RateParams with_values(const RateParams& base,
                              const std::vector<std::string>& names,
                              const Eigen::VectorXd& x) {
  RateParams p = base;
  for (std::size_t i = 0; i < names.size(); ++i) p.*param_member(names[i]) = x[i];
  return p;
}

// Central differences with relative step 1e-6; evaluation points are clamped
// to the bounds so the model never sees an invalid parameter.
inline Eigen::MatrixXd fd_jacobian(const FitProblem& prob, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& scale) {
  const std::size_t n_par = x.size();
  Eigen::MatrixXd j;
  for (std::size_t i = 0; i < n_par; ++i) {
    const ParamBounds b = prob.bounds_for(prob.free_params[i]);
    const double h = 1e-6 * std::max(std::abs(x[i]), 1e-6 * scale[i]);
    Eigen::VectorXd xp = x, xm = x;
    xp[i] = std::min(x[i] + h, b.hi);
    xm[i] = std::max(x[i] - h, b.lo);
    const Eigen::VectorXd rp =
        residuals(prob, with_values(prob.initial_guess, prob.free_params, xp));
    const Eigen::VectorXd rm =
        residuals(prob, with_values(prob.initial_guess, prob.free_params, xm));
    if (j.size() == 0) j.resize(rp.size(), n_par);
    j.col(i) = (rp - rm) / (xp[i] - xm[i]);
  }
  return j;
}

inline std::string describe_null_combination(const std::vector<std::string>& names,
                                             const Eigen::VectorXd& v) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (std::abs(v[i]) < 0.1) continue;
    if (!first) os << (v[i] >= 0 ? " + " : " - ");
    else if (v[i] < 0) os << "-";
    os << std::abs(v[i]) << "*" << names[i];
    first = false;
  }
  return os.str();
}

}  // namespace detail

inline FitResult fit(const FitProblem& problem) {
  problem.validate();
  const std::size_t n_par = problem.free_params.size();

  Eigen::VectorXd x(n_par), scale(n_par);
  for (std::size_t i = 0; i < n_par; ++i) {
    x[i] = problem.initial_guess.*param_member(problem.free_params[i]);
    scale[i] = std::max(std::abs(x[i]), 1e-30);
  }

  const auto clamp_to_bounds = [&](Eigen::VectorXd v) {
    for (std::size_t i = 0; i < n_par; ++i) {
      const ParamBounds b = problem.bounds_for(problem.free_params[i]);
      v[i] = std::min(std::max(v[i], b.lo), b.hi);
    }
    return v;
  };

  Eigen::VectorXd r =
      residuals(problem, detail::with_values(problem.initial_guess,
                                             problem.free_params, x));
  double norm = r.norm();

  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  constexpr int max_iter = 500;

  for (; iter < max_iter && !converged; ++iter) {
    const Eigen::MatrixXd j = detail::fd_jacobian(problem, x, scale);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;

    // Marquardt damping on the diagonal; exactly-insensitive directions get
    // a unit damping entry so their step stays zero.
    Eigen::VectorXd d = jtj.diagonal();
    for (std::size_t i = 0; i < n_par; ++i)
      if (d[i] <= 0) d[i] = 1;

    bool accepted = false;
    for (int tries = 0; tries < 25 && !accepted; ++tries) {
      Eigen::MatrixXd h = jtj;
      h.diagonal() += lambda * d;
      const Eigen::VectorXd delta = h.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Eigen::VectorXd x_new = clamp_to_bounds(x + delta);
      const Eigen::VectorXd r_new = residuals(
          problem, detail::with_values(problem.initial_guess, problem.free_params,
                                       x_new));
      const double norm_new = r_new.norm();
      if (norm_new <= norm) {
        const double step = (x_new - x).cwiseQuotient(scale).norm();
        const double decrease = (norm - norm_new) / std::max(norm, 1e-300);
        x = x_new;
        r = r_new;
        norm = norm_new;
        lambda = std::max(lambda / 3, 1e-14);
        accepted = true;
        if (decrease < 1e-10 || step < 1e-12 || norm == 0) converged = true;
      } else {
        lambda *= 10;
      }
    }
    if (!accepted) {
      converged = true;  // damping saturated; no downhill step exists
    }
  }

  // Covariance from the Jacobian at the solution.
  const Eigen::MatrixXd j = detail::fd_jacobian(problem, x, scale);
  const Eigen::MatrixXd jtj = j.transpose() * j;

  // Rank check in scaled units so it is meaningful across magnitudes.
  const Eigen::MatrixXd jtj_scaled =
      scale.asDiagonal() * jtj * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj_scaled);
  const double ev_max = es.eigenvalues().maxCoeff();
  if (!(ev_max > 0) || es.eigenvalues().minCoeff() <= ev_max * 1e-14) {
    const Eigen::VectorXd null_dir = es.eigenvectors().col(0);
    throw rank_deficiency_error(
        "fit: singular normal equations; unidentifiable combination: " +
        detail::describe_null_combination(problem.free_params, null_dir));
  }

  const std::size_t n_obs = r.size();
  const double sigma2 =
      norm * norm / static_cast<double>(n_obs > n_par ? n_obs - n_par : 1);

  FitResult result;
  result.estimate = detail::with_values(problem.initial_guess, problem.free_params, x);
  result.residual_norm = norm;
  result.covariance = sigma2 * jtj.inverse();
  result.confidence = result.covariance.diagonal().cwiseSqrt();
  result.iterations = iter;
  result.converged = converged;
  return result;
}

}  // namespace zenosim
