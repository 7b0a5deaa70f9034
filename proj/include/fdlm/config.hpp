#pragma once

#include "fdlm/analysis.hpp"
#include "fdlm/benchmark.hpp"
#include "fdlm/core.hpp"
#include "fdlm/timestep.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fdlm {

enum class Job { Benchmark, TemporalConvergence, SpatialConvergence, InfSupReport };

inline const char* to_string(Job j) {
  switch (j) {
    case Job::Benchmark: return "Benchmark";
    case Job::TemporalConvergence: return "TemporalConvergence";
    case Job::SpatialConvergence: return "SpatialConvergence";
    case Job::InfSupReport: return "InfSupReport";
  }
  return "?";
}

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct RunConfig {
  Job job = Job::Benchmark;
  PhysParams params;
  MeshSpec mesh;
  RingGeometry ring;
  SchemeConfig scheme;
  std::string output_dir = "out";
  int snapshot_stride = 10;

  // TemporalConvergence
  std::vector<double> dts = {0.05, 0.025, 0.0125, 0.00625};
  std::vector<Scheme> schemes = {Scheme::BE_semi, Scheme::BDF2};
  int reference_factor = 8;

  // SpatialConvergence
  int coarsest_cells = 4;
  int levels = 4;

  // InfSupReport: fluid cell counts, solid mesh size 1/n each
  std::vector<int> infsup_cells = {4, 8, 16};

  // Key/value pairs as read, in file order, for the manifest.
  std::vector<std::pair<std::string, std::string>> echo;

  void validate() const {
    params.validate();
    mesh.validate();
    scheme.validate();
    require(ring.r_in > 0.0 && ring.r_out > ring.r_in, "ring radii must satisfy 0 < r_in < r_out");
    require(ring.stretch > 0.0, "stretch must be positive");
    require(ring.r_out * std::max(ring.stretch, 1.0 / ring.stretch) < 1.0,
            "stretched ring does not fit in the container");
    require(snapshot_stride >= 0, "snapshot_stride must be nonnegative");
    require(!output_dir.empty(), "output_dir must not be empty");
    require(!dts.empty() && !schemes.empty(), "dts and schemes must not be empty");
    for (double dt : dts) require(dt > 0.0, "dts must be positive");
    require(reference_factor >= 1, "reference_factor must be at least 1");
    require(coarsest_cells >= 4 && coarsest_cells % 4 == 0, "coarsest_cells must be a multiple of 4");
    require(levels >= 1 && levels <= 6, "levels must be between 1 and 6");
    require(!infsup_cells.empty(), "infsup_cells must not be empty");
    for (int n : infsup_cells) require(n >= 1, "infsup_cells must be positive");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "': '" + v + "' is not a valid number");
  return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& s : split_list(v)) out.push_back(parse_number<T>(key, s));
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace detail

/// Parses flat key=value text with '#' comments. Unknown or repeated keys,
/// malformed lines and out-of-range values raise ConfigError.
inline RunConfig parse_config(std::istream& is) {
  RunConfig c;
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    if (!kv.emplace(key, val).second) throw ConfigError("config key '" + key + "' given twice");
    c.echo.emplace_back(key, val);
  }

  using detail::parse_number;
  for (const auto& [key, v] : kv) {
    try {
      if (key == "job") {
        if (v == "Benchmark") c.job = Job::Benchmark;
        else if (v == "TemporalConvergence") c.job = Job::TemporalConvergence;
        else if (v == "SpatialConvergence") c.job = Job::SpatialConvergence;
        else if (v == "InfSupReport") c.job = Job::InfSupReport;
        else throw ConfigError("unknown job '" + v + "'");
      } else if (key == "rho_f") c.params.rho_f = parse_number<double>(key, v);
      else if (key == "delta_rho") c.params.delta_rho = parse_number<double>(key, v);
      else if (key == "nu_f") c.params.nu_f = parse_number<double>(key, v);
      else if (key == "nu_s") c.params.nu_s = parse_number<double>(key, v);
      else if (key == "kappa") c.params.kappa = parse_number<double>(key, v);
      else if (key == "n_cells") c.mesh.fluid_cells = parse_number<int>(key, v);
      else if (key == "solid_h") c.mesh.solid_h = parse_number<double>(key, v);
      else if (key == "velocity_element") {
        if (v == "P1isoP2") c.mesh.velocity = VelocityElement::P1isoP2;
        else if (v == "TaylorHood") c.mesh.velocity = VelocityElement::TaylorHoodP2;
        else throw ConfigError("unknown velocity_element '" + v + "'");
      } else if (key == "pressure_element") {
        if (v == "BPenhanced") c.mesh.pressure = PressureElement::BPenhanced;
        else if (v == "P1") c.mesh.pressure = PressureElement::P1;
        else throw ConfigError("unknown pressure_element '" + v + "'");
      } else if (key == "solid_degree") c.mesh.solid_degree = parse_number<int>(key, v);
      else if (key == "multiplier_degree") c.mesh.multiplier_degree = parse_number<int>(key, v);
      else if (key == "coupling_form") {
        if (v == "C1_L2") c.mesh.form = CouplingForm::C1_L2;
        else if (v == "C2_H1") c.mesh.form = CouplingForm::C2_H1;
        else throw ConfigError("unknown coupling_form '" + v + "'");
      } else if (key == "coupling_quad_degree") c.mesh.coupling_quad_degree = parse_number<int>(key, v);
      else if (key == "r_in") c.ring.r_in = parse_number<double>(key, v);
      else if (key == "r_out") c.ring.r_out = parse_number<double>(key, v);
      else if (key == "stretch") c.ring.stretch = parse_number<double>(key, v);
      else if (key == "scheme") c.scheme.scheme = scheme_from_string(v);
      else if (key == "dt") c.scheme.dt = parse_number<double>(key, v);
      else if (key == "T") c.scheme.T = parse_number<double>(key, v);
      else if (key == "picard_tol") c.scheme.fixed_point.tol = parse_number<double>(key, v);
      else if (key == "picard_max_iter") c.scheme.fixed_point.max_iter = parse_number<int>(key, v);
      else if (key == "bdf2_extrapolation") {
        if (v == "true") c.scheme.bdf2_extrapolate = true;
        else if (v == "false") c.scheme.bdf2_extrapolate = false;
        else throw ConfigError("bdf2_extrapolation must be true or false, got '" + v + "'");
      } else if (key == "output_dir") c.output_dir = v;
      else if (key == "snapshot_stride") c.snapshot_stride = parse_number<int>(key, v);
      else if (key == "dts") c.dts = detail::parse_list<double>(key, v);
      else if (key == "schemes") {
        c.schemes.clear();
        for (const auto& s : detail::split_list(v)) c.schemes.push_back(scheme_from_string(s));
      } else if (key == "reference_factor") c.reference_factor = parse_number<int>(key, v);
      else if (key == "coarsest_cells") c.coarsest_cells = parse_number<int>(key, v);
      else if (key == "levels") c.levels = parse_number<int>(key, v);
      else if (key == "infsup_cells") c.infsup_cells = detail::parse_list<int>(key, v);
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  // The batch jobs assemble one viscosity over the whole container.
  if (kv.count("nu_s") == 0) c.params.nu_s = c.params.nu_f;
  else if (c.params.nu_s != c.params.nu_f)
    throw ConfigError("nu_s must equal nu_f: piecewise viscosity is not available in batch jobs");
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace fdlm
