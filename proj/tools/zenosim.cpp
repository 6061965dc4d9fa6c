// zenosim: simulate and fit the ground-state spin dynamics of a single NV
// center: laser-on transients, Rabi oscillations, the projective-pulse (Zeno)
// tau sweep, and rate-parameter estimation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "zenosim/io.hpp"
#include "zenosim/zenosim.hpp"

using nlohmann::json;

namespace {

struct RunConfig {
  std::string params_file;
  std::string config_file;
  std::string dump_config;
  std::string out;
  std::uint64_t seed = 1;

  // transient / fit protocols
  std::string init = "bright";
  double duration = 3e-6;
  int samples = 301;
  double laser_fraction = 1.0;

  // rabi
  double mw_max = 960e-9;
  double mw_step = 10e-9;

  // zeno sweep
  double tau_start = -300e-9;
  double tau_end = 300e-9;
  double tau_step = 10e-9;
  std::string zeno = "both";

  // protocol overrides
  double mw_pi_duration = 120e-9;
  double zeno_pulse_duration = 12e-9;
  double zeno_pulse_power = 1.0;
  double init_laser_duration = 5e-6;
  double relax_wait = 1e-6;
  double pre_gap = 300e-9;
  double readout_delay = 300e-9;
  double readout_window = 300e-9;

  // fit
  std::string data_file;
  std::string protocol = "transient-pair";
  std::string free_params = "k_exc,k_rad,k_desh,k_s,theta,i_bg";
  double noise_scale = 0.02;
  bool synthesize = false;
  double init_perturb = 0.0;
};

// Field table: flag name (dashes) <-> JSON key (underscores) <-> member.
template <typename F>
void for_each_field(RunConfig& c, F&& f) {
  f("params-file", c.params_file);
  f("dump-config", c.dump_config);
  f("out", c.out);
  f("seed", c.seed);
  f("init", c.init);
  f("duration", c.duration);
  f("samples", c.samples);
  f("laser-fraction", c.laser_fraction);
  f("mw-max", c.mw_max);
  f("mw-step", c.mw_step);
  f("tau-start", c.tau_start);
  f("tau-end", c.tau_end);
  f("tau-step", c.tau_step);
  f("zeno", c.zeno);
  f("mw-pi-duration", c.mw_pi_duration);
  f("zeno-pulse-duration", c.zeno_pulse_duration);
  f("zeno-pulse-power", c.zeno_pulse_power);
  f("init-laser-duration", c.init_laser_duration);
  f("relax-wait", c.relax_wait);
  f("pre-gap", c.pre_gap);
  f("readout-delay", c.readout_delay);
  f("readout-window", c.readout_window);
  f("data", c.data_file);
  f("protocol", c.protocol);
  f("free", c.free_params);
  f("noise-scale", c.noise_scale);
  f("synthesize", c.synthesize);
  f("init-perturb", c.init_perturb);
}

std::string json_key(std::string flag) {
  for (auto& ch : flag)
    if (ch == '-') ch = '_';
  return flag;
}

void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw zenosim::config_error("cannot open config file: " + path);
  json j;
  in >> j;
  for_each_field(c, [&](const std::string& flag, auto& member) {
    const std::string key = json_key(flag);
    if (j.contains(key)) member = j.at(key).get<std::decay_t<decltype(member)>>();
  });
}

void dump_config_file(const RunConfig& c, const std::string& path) {
  json j;
  for_each_field(const_cast<RunConfig&>(c),
                 [&](const std::string& flag, auto& member) {
                   j[json_key(flag)] = member;
                 });
  std::ofstream out(path);
  if (!out) throw zenosim::config_error("cannot write config file: " + path);
  out << j.dump(2) << "\n";
}

zenosim::ZenoProtocolConfig protocol_config(const RunConfig& c) {
  zenosim::ZenoProtocolConfig cfg;
  cfg.mw_pi_duration = c.mw_pi_duration;
  cfg.zeno_pulse_duration = c.zeno_pulse_duration;
  cfg.zeno_pulse_power_fraction = c.zeno_pulse_power;
  cfg.init_laser_duration = c.init_laser_duration;
  cfg.relax_wait = c.relax_wait;
  cfg.pre_gap = c.pre_gap;
  cfg.readout_delay = c.readout_delay;
  cfg.readout_window = c.readout_window;
  cfg.initial_dark = c.init == "dark";
  return cfg;
}

std::vector<double> sweep_grid(double start, double end, double step) {
  if (!(step > 0) || end < start)
    throw zenosim::config_error("invalid sweep grid");
  std::vector<double> g;
  for (double v = start; v <= end + step / 2; v += step) g.push_back(v);
  return g;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

void require_out(const RunConfig& c) {
  if (c.out.empty()) throw zenosim::config_error("--out is required");
}

void cmd_transient(const RunConfig& c, const zenosim::RateParams& p) {
  require_out(c);
  if (c.samples < 2) throw zenosim::config_error("--samples must be >= 2");
  const zenosim::ProtocolSpec proto{c.init == "dark"
                                        ? zenosim::Protocol::transient_dark
                                        : zenosim::Protocol::transient_bright,
                                    c.laser_fraction};
  std::vector<double> grid(c.samples);
  for (int i = 0; i < c.samples; ++i) grid[i] = c.duration * i / (c.samples - 1);
  const Eigen::VectorXd curve = zenosim::model_curve(p, proto, grid);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < c.samples; ++i) rows.push_back({grid[i], curve[i]});
  zenosim::write_csv(c.out, {"time_s", "intensity"}, rows);
  std::printf("wrote %d transient samples to %s\n", c.samples, c.out.c_str());
}

void cmd_rabi(const RunConfig& c, const zenosim::RateParams& p) {
  require_out(c);
  const auto durations = sweep_grid(0.0, c.mw_max, c.mw_step);
  const auto points = zenosim::simulate_rabi(p, durations, protocol_config(c));
  std::vector<std::vector<double>> rows;
  for (const auto& [dur, ms] : points) rows.push_back({dur, ms});
  zenosim::write_csv(c.out, {"duration_s", "ms_projection"}, rows);
  std::printf("wrote %zu Rabi points to %s\n", rows.size(), c.out.c_str());
}

void cmd_zeno_sweep(const RunConfig& c, const zenosim::RateParams& p) {
  require_out(c);
  if (c.zeno != "on" && c.zeno != "off" && c.zeno != "both")
    throw zenosim::config_error("--zeno must be on, off or both");
  const auto taus = sweep_grid(c.tau_start, c.tau_end, c.tau_step);
  zenosim::ZenoProtocolConfig cfg = protocol_config(c);

  std::vector<std::vector<double>> rows(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) rows[i] = {taus[i]};
  std::vector<std::string> columns{"tau_s"};

  const auto append = [&](bool zeno_on, const std::string& name) {
    cfg.zeno_enabled = zeno_on;
    const auto sweep = zenosim::simulate_zeno_sweep(p, cfg, taus);
    for (std::size_t i = 0; i < taus.size(); ++i)
      rows[i].push_back(sweep[i].second);
    columns.push_back(name);
  };
  if (c.zeno == "on" || c.zeno == "both") append(true, "ms_zeno_on");
  if (c.zeno == "off" || c.zeno == "both") append(false, "ms_zeno_off");

  zenosim::write_csv(c.out, columns, rows);
  std::printf("wrote %zu sweep points to %s\n", taus.size(), c.out.c_str());
}

void cmd_excitation_prob(const RunConfig& c, const zenosim::RateParams& p) {
  const double prob = zenosim::excitation_probability(p, c.zeno_pulse_duration,
                                                      c.zeno_pulse_power);
  std::printf("pulse %.3g s at power fraction %.3g: excitation probability %.6f\n",
              c.zeno_pulse_duration, c.zeno_pulse_power, prob);
  if (!c.out.empty())
    zenosim::write_csv(c.out, {"pulse_duration_s", "power_fraction", "probability"},
                       {{c.zeno_pulse_duration, c.zeno_pulse_power, prob}});
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> names;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty()) names.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) names.push_back(cur);
  return names;
}

void cmd_fit(const RunConfig& c, const zenosim::RateParams& p) {
  using namespace zenosim;

  if (c.synthesize) {
    require_out(c);
    std::vector<double> grid(c.samples);
    for (int i = 0; i < c.samples; ++i) grid[i] = c.duration * i / (c.samples - 1);
    const Dataset bright = synthesize_dataset(p, {Protocol::transient_bright, 1.0},
                                              grid, c.noise_scale, c.seed);
    const Dataset dark = synthesize_dataset(p, {Protocol::transient_dark, 1.0},
                                            grid, c.noise_scale, c.seed + 1);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i)
      rows.push_back({grid[i], bright.values[i], dark.values[i]});
    write_csv(c.out, {"time_s", "intensity_bright", "intensity_dark"}, rows);
    std::printf("wrote synthetic transient pair (noise %.3g, seed %llu) to %s\n",
                c.noise_scale, static_cast<unsigned long long>(c.seed),
                c.out.c_str());
    return;
  }

  if (c.data_file.empty()) throw config_error("--data is required for fit");
  const CsvTable table = read_csv(c.data_file);

  FitProblem prob;
  const auto column = [&](std::size_t idx) {
    std::vector<double> v;
    v.reserve(table.rows.size());
    for (const auto& row : table.rows) v.push_back(row.at(idx));
    return v;
  };
  const std::vector<double> times = column(0);

  if (c.protocol == "transient-pair") {
    if (table.columns.size() < 3)
      throw config_error("transient-pair expects time_s,intensity_bright,intensity_dark");
    prob.datasets.push_back(
        {{Protocol::transient_bright, c.laser_fraction}, times, column(1),
         c.noise_scale});
    prob.datasets.push_back(
        {{Protocol::transient_dark, c.laser_fraction}, times, column(2),
         c.noise_scale});
  } else if (c.protocol == "transient") {
    prob.datasets.push_back({{c.init == "dark" ? Protocol::transient_dark
                                               : Protocol::transient_bright,
                              c.laser_fraction},
                             times, column(1), c.noise_scale});
  } else if (c.protocol == "lifetime") {
    prob.datasets.push_back(
        {{Protocol::lifetime, c.laser_fraction}, times, column(1), c.noise_scale});
  } else {
    throw config_error("unknown fit protocol: " + c.protocol);
  }

  prob.free_params = split_names(c.free_params);
  prob.initial_guess = p;
  if (c.init_perturb != 0) {
    double sign = 1;
    for (const auto& name : prob.free_params) {
      prob.initial_guess.*param_member(name) *= 1.0 + sign * c.init_perturb;
      sign = -sign;
    }
  }

  const FitResult res = fit(prob);

  std::printf("fit of %zu datasets, %zu observations\n", prob.datasets.size(),
              static_cast<std::size_t>(residuals(prob, res.estimate).size()));
  std::printf("converged: %s after %d iterations, residual norm %.6g\n",
              res.converged ? "yes" : "no", res.iterations, res.residual_norm);
  std::printf("%-10s %14s %14s\n", "parameter", "estimate", "1-sigma");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < prob.free_params.size(); ++i) {
    const double est = res.estimate.*param_member(prob.free_params[i]);
    std::printf("%-10s %14.6g %14.6g\n", prob.free_params[i].c_str(), est,
                res.confidence[i]);
    rows.push_back({static_cast<double>(i), est, res.confidence[i]});
  }
  if (!c.out.empty())
    write_csv(c.out, {"param_index", "estimate", "confidence"}, rows);
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // The config file provides defaults; explicit flags override it.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    try {
      if (arg.rfind("--config=", 0) == 0) {
        cfg.config_file = arg.substr(9);
        apply_config_file(cfg, cfg.config_file);
      } else if (arg == "--config" && i + 1 < argc) {
        cfg.config_file = argv[i + 1];
        apply_config_file(cfg, cfg.config_file);
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{"NV-center spin dynamics simulator"};
  app.require_subcommand(1);
  std::string ignored_config;
  app.add_option("--config", ignored_config, "JSON config file (flags override)");

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--params-file", cfg.params_file, "JSON rate-parameter file");
    sub->add_option("--out", cfg.out, "output CSV path");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--dump-config", cfg.dump_config,
                    "write the effective config as JSON");
    sub->add_option("--config", ignored_config, "JSON config file");
  };

  CLI::App* transient = app.add_subcommand("transient", "laser switch-on transient");
  add_common(transient);
  transient->add_option("--init", cfg.init, "bright|dark");
  transient->add_option("--duration", cfg.duration, "trace length, s");
  transient->add_option("--samples", cfg.samples, "number of samples");
  transient->add_option("--laser-fraction", cfg.laser_fraction, "laser power fraction");

  CLI::App* rabi = app.add_subcommand("rabi", "Rabi oscillation scan");
  add_common(rabi);
  rabi->add_option("--mw-max", cfg.mw_max, "longest MW duration, s");
  rabi->add_option("--mw-step", cfg.mw_step, "MW duration step, s");

  CLI::App* sweep = app.add_subcommand("zeno-sweep", "projective-pulse tau sweep");
  add_common(sweep);
  sweep->add_option("--tau-start", cfg.tau_start, "first tau, s");
  sweep->add_option("--tau-end", cfg.tau_end, "last tau, s");
  sweep->add_option("--tau-step", cfg.tau_step, "tau step, s");
  sweep->add_option("--init", cfg.init, "bright|dark");
  sweep->add_option("--zeno", cfg.zeno, "on|off|both");
  sweep->add_option("--mw-pi-duration", cfg.mw_pi_duration, "pi-pulse length, s");
  sweep->add_option("--zeno-pulse-duration", cfg.zeno_pulse_duration, "pulse length, s");
  sweep->add_option("--zeno-pulse-power", cfg.zeno_pulse_power, "pulse power fraction");
  sweep->add_option("--init-laser-duration", cfg.init_laser_duration, "init laser, s");
  sweep->add_option("--relax-wait", cfg.relax_wait, "relaxation wait, s");
  sweep->add_option("--pre-gap", cfg.pre_gap, "gap before the MW pulse, s");
  sweep->add_option("--readout-delay", cfg.readout_delay, "MW end to readout, s");
  sweep->add_option("--readout-window", cfg.readout_window, "readout window, s");

  CLI::App* fit_cmd = app.add_subcommand("fit", "least-squares parameter estimation");
  add_common(fit_cmd);
  fit_cmd->add_option("--data", cfg.data_file, "CSV data file");
  fit_cmd->add_option("--protocol", cfg.protocol, "transient-pair|transient|lifetime");
  fit_cmd->add_option("--free", cfg.free_params, "comma-separated free parameters");
  fit_cmd->add_option("--noise-scale", cfg.noise_scale, "relative noise level");
  fit_cmd->add_flag("--synthesize", cfg.synthesize, "write synthetic data instead");
  fit_cmd->add_option("--init", cfg.init, "bright|dark (single-transient protocol)");
  fit_cmd->add_option("--init-perturb", cfg.init_perturb,
                      "relative perturbation of the initial guess");
  fit_cmd->add_option("--duration", cfg.duration, "synthetic trace length, s");
  fit_cmd->add_option("--samples", cfg.samples, "synthetic sample count");
  fit_cmd->add_option("--laser-fraction", cfg.laser_fraction, "laser power fraction");

  CLI::App* exc = app.add_subcommand("excitation-prob",
                                     "projective-pulse excitation probability");
  add_common(exc);
  exc->add_option("--pulse-duration", cfg.zeno_pulse_duration, "pulse length, s");
  exc->add_option("--power-fraction", cfg.zeno_pulse_power, "pulse power fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    zenosim::RateParams params;
    if (!cfg.params_file.empty()) params = zenosim::load_params_file(cfg.params_file);
    params.validate();

    if (!cfg.dump_config.empty()) dump_config_file(cfg, cfg.dump_config);

    if (transient->parsed()) cmd_transient(cfg, params);
    else if (rabi->parsed()) cmd_rabi(cfg, params);
    else if (sweep->parsed()) cmd_zeno_sweep(cfg, params);
    else if (fit_cmd->parsed()) cmd_fit(cfg, params);
    else if (exc->parsed()) cmd_excitation_prob(cfg, params);
  } catch (const zenosim::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const zenosim::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
