#pragma once

#include <cmath>
#include <random>

#include "zenosim/model.hpp"

// Shared randomization helpers for property-style tests.  Parameter ranges
// span the physically sensible NV regime (rates 1e5..2e8 per second).

namespace zenosim::testing {

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline RateParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RateParams p;
  p.rabi_omega = log_uniform(rng, 1e6, 1e8);
  p.t2_star = log_uniform(rng, 1e-7, 1e-5);
  p.k_exc_cw = log_uniform(rng, 1e5, 2e8);
  p.k_rad = log_uniform(rng, 1e5, 2e8);
  p.k_desh = log_uniform(rng, 1e5, 2e8);
  p.k_s = log_uniform(rng, 1e5, 2e8);
  p.theta = u01(rng) * std::numbers::pi / 2;
  p.i_bg = u01(rng) * 0.9;
  p.eta_pol = u01(rng);
  return p;
}

inline Controls random_controls(std::mt19937_64& rng, bool zeno_enabled = true) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 2);
  Controls c;
  const int kind = coin(rng);
  c.laser_fraction = kind == 0 ? 0.0 : (kind == 1 ? 1.0 : u01(rng));
  c.mw_on = (rng() & 1) != 0;
  c.zeno_enabled = zeno_enabled;
  return c;
}

}  // namespace zenosim::testing
