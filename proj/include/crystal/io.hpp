#pragma once

// CSV and JSON artifacts. CSV files use ',' separators, '.' decimals, LF line
// endings and start with a '#' comment line holding the full parameter set.
// Floating-point values are written with 17 significant digits.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crystal/elliptic.hpp"
#include "crystal/error.hpp"
#include "crystal/evolution.hpp"
#include "crystal/selfsimilar.hpp"

namespace crystal::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  /// Appends one `key=value` pair to the '#' header comment.
  CsvWriter& param(const std::string& key, const std::string& value) {
    params_.emplace_back(key, value);
    return *this;
  }
  CsvWriter& param(const std::string& key, double value) { return param(key, format_double(value)); }
  CsvWriter& param(const std::string& key, int value) { return param(key, std::to_string(value)); }

  CsvWriter& columns(std::vector<std::string> names) {
    columns_ = std::move(names);
    return *this;
  }

  CsvWriter& row(const std::vector<double>& values) {
    if (!columns_.empty() && values.size() != columns_.size()) {
      throw InvalidInput("CsvWriter: row width does not match the column count");
    }
    rows_.push_back(values);
    return *this;
  }

  std::string str() const {
    std::string out = "#";
    for (const auto& [key, value] : params_) out += " " + key + "=" + value;
    out += "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ",";
        out += format_double(r[i]);
      }
      out += "\n";
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> params_;
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw InvalidInput("failed writing " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Profiles

inline std::string profile_csv(const selfsimilar::RadialProfile& p) {
  CsvWriter w;
  w.param("N", p.params.dim())
      .param("beta", p.params.beta())
      .param("c2", p.c2)
      .param("c4", p.c4)
      .param("R", p.R())
      .param("nodes", static_cast<int>(p.size()))
      .param("tol", p.config.tol)
      .param("damping", p.config.damping)
      .param("iterations", p.iterations)
      .param("defect", p.defect);
  w.columns({"r", "h", "f", "v_reconstructed"});
  for (std::size_t i = 0; i < p.size(); ++i) w.row({p.r[i], p.h[i], p.f(i), p.v[i]});
  return w.str();
}

namespace detail {

inline std::vector<std::pair<std::string, std::string>> parse_header(const std::string& line) {
  if (line.empty() || line[0] != '#') throw InvalidInput("CSV: missing '#' header line");
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream ss(line.substr(1));
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw InvalidInput("CSV: malformed header entry '" + token + "'");
    out.emplace_back(token.substr(0, eq), token.substr(eq + 1));
  }
  return out;
}

inline std::string lookup(const std::vector<std::pair<std::string, std::string>>& kv,
                          const std::string& key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return v;
  }
  throw InvalidInput("CSV: header lacks '" + key + "'");
}

inline double to_double(const std::string& s) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidInput("CSV: not a number: '" + s + "'");
  }
  if (used != s.size()) throw InvalidInput("CSV: not a number: '" + s + "'");
  return x;
}

}  // namespace detail

/// Parses the output of profile_csv.
inline selfsimilar::RadialProfile read_profile_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  const auto kv = detail::parse_header(line);
  const kernels::KernelParams params(static_cast<int>(detail::to_double(detail::lookup(kv, "N"))),
                                     detail::to_double(detail::lookup(kv, "beta")));
  std::getline(in, line);
  if (line != "r,h,f,v_reconstructed") throw InvalidInput("CSV: unexpected profile columns");
  selfsimilar::RadialProfile p{.r = {}, .h = {}, .v = {}, .params = params};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(cells, cell, ',')) values.push_back(detail::to_double(cell));
    if (values.size() != 4) throw InvalidInput("CSV: profile rows need 4 columns");
    p.r.push_back(values[0]);
    p.h.push_back(values[1]);
    p.v.push_back(values[3]);
  }
  p.c2 = detail::to_double(detail::lookup(kv, "c2"));
  p.c4 = detail::to_double(detail::lookup(kv, "c4"));
  p.config.R = p.R();
  p.config.nodes = static_cast<int>(p.size());
  p.config.tol = detail::to_double(detail::lookup(kv, "tol"));
  p.config.damping = detail::to_double(detail::lookup(kv, "damping"));
  p.iterations = static_cast<int>(detail::to_double(detail::lookup(kv, "iterations")));
  p.defect = detail::to_double(detail::lookup(kv, "defect"));
  return p;
}

// ---------------------------------------------------------------------------
// Elliptic states and trajectories

inline std::string state_csv(const elliptic::EllipticState& s) {
  const auto& g = *s.grid;
  CsvWriter w;
  w.param("dim", g.dim())
      .param("spacing", g.spacing())
      .param("k", s.k)
      .param("lambda", s.lambda)
      .param("iterations", s.iterations)
      .param("defect", s.defect);
  if (g.dim() == 1) {
    w.columns({"x", "psi", "v", "phi"});
    for (std::size_t n = 0; n < g.size(); ++n) w.row({g.x(n), s.psi[n], s.v[n], s.phi[n]});
  } else {
    w.columns({"x", "y", "psi", "v", "phi"});
    for (std::size_t n = 0; n < g.size(); ++n) {
      w.row({g.x(n), g.y(n), s.psi[n], s.v[n], s.phi[n]});
    }
  }
  return w.str();
}

inline std::string trajectory_csv(const evolution::Trajectory& tr, const elliptic::EllipticState& s,
                                  double A0, double t_end) {
  const auto& g = *s.grid;
  CsvWriter w;
  w.param("dim", g.dim())
      .param("spacing", g.spacing())
      .param("k", s.k)
      .param("lambda", s.lambda)
      .param("A0", A0)
      .param("t_end", t_end)
      .param("steps", static_cast<int>(tr.steps));
  std::vector<std::string> cols{"t"};
  for (std::size_t n = 0; n < g.size(); ++n) cols.push_back("node" + std::to_string(n));
  w.columns(cols);
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    std::vector<double> row{tr.times[j]};
    row.insert(row.end(), tr.rho[j].begin(), tr.rho[j].end());
    w.row(row);
  }
  return w.str();
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

/// Diagnostics record of one elliptic state.
inline json state_diagnostics(const elliptic::EllipticState& s, double margin = 0.2) {
  const auto e = elliptic::energy_balance(s);
  const auto row = elliptic::gradient_blowup_diagnostic(std::span(&s, 1)).front();
  json j;
  j["k"] = s.k;
  j["lambda"] = s.lambda;
  j["iterations"] = s.iterations;
  j["defect"] = s.defect;
  j["energy_defect"] = e.defect;
  j["energy_relative"] = e.relative();
  j["interior_residual"] = elliptic::interior_residual(s, margin);
  j["D"] = row.D;
  j["B"] = row.B;
  j["boundary_trace"] = elliptic::boundary_trace(s);
  if (s.lambda > 0.0) j["poincare_ratio"] = elliptic::poincare_ratio(s);
  return j;
}

/// RunReport: {command, inputs, iterations, defects, residuals, wall_time}.
struct RunReport {
  std::string command;
  json inputs = json::object();
  json iterations = json::object();
  json defects = json::object();
  json residuals = json::object();
  double wall_time = 0.0;

  json to_json() const {
    json j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["iterations"] = iterations;
    j["defects"] = defects;
    j["residuals"] = residuals;
    j["wall_time"] = wall_time;
    return j;
  }
};

}  // namespace crystal::io
