#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zenosim/errors.hpp"
#include "zenosim/model.hpp"

// Serialization helpers shared by the CLI: JSON parameter files and plain
// CSV traces.  Numbers are written with %.17g so identical runs produce
// byte-identical files.

namespace zenosim {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void params_to_json(const RateParams& p, nlohmann::json& j) {
  j["rabi_omega"] = p.rabi_omega;
  j["t2_star"] = p.t2_star;
  j["k_exc_cw"] = p.k_exc_cw;
  j["k_rad"] = p.k_rad;
  j["k_desh"] = p.k_desh;
  j["k_s"] = p.k_s;
  j["theta"] = p.theta;
  j["i_bg"] = p.i_bg;
  j["eta_pol"] = p.eta_pol;
}

inline void params_from_json(const nlohmann::json& j, RateParams& p) {
  const auto get = [&](const char* key, double& out) {
    if (j.contains(key)) out = j.at(key).get<double>();
  };
  get("rabi_omega", p.rabi_omega);
  get("t2_star", p.t2_star);
  get("k_exc_cw", p.k_exc_cw);
  get("k_rad", p.k_rad);
  get("k_desh", p.k_desh);
  get("k_s", p.k_s);
  get("theta", p.theta);
  get("i_bg", p.i_bg);
  get("eta_pol", p.eta_pol);
  p.validate();
}

inline RateParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open params file: " + path);
  nlohmann::json j;
  in >> j;
  RateParams p;
  params_from_json(j, p);
  return p;
}

// CSV with a header row; columns.size() column names, rows of doubles.
inline void write_csv(const std::string& path, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open output file: " + path);
  for (std::size_t i = 0; i < columns.size(); ++i)
    out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
  }
  if (!out) throw config_error("failed writing: " + path);
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open data file: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw config_error("empty data file: " + path);
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != table.columns.size())
      throw config_error("ragged CSV row in: " + path);
    table.rows.push_back(std::move(vals));
  }
  return table;
}

}  // namespace zenosim
