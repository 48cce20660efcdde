#pragma once

// Scenario files (JSON) and the shipped `paper-sec7` preset.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "szcbf/control.hpp"
#include "szcbf/errors.hpp"
#include "szcbf/linalg.hpp"
#include "szcbf/vessel.hpp"

namespace szcbf {

struct SimulationBlock {
  double T = 100.0;
  double dt = 1e-3;
  std::size_t n_paths = 10;
  std::uint64_t seed = 1;
  Mode mode = Mode::Tra;
  bool stop_on_exit = false;
  std::size_t record_stride = 10;  // trajectory files keep every k-th grid point
};

struct Scenario {
  double c = 0.0;
  double v_r = 0.0;
  double omega_r = 0.0;
  Vector G;
  Matrix Q_prime;
  Matrix R;
  Matrix R_prime;
  double b_prime = 0.0;
  double M = 0.0;
  double mu = 0.0;
  double M_prime = 0.0;
  double eps_den = 1e-10;
  ErrorState x0;
  SimulationBlock simulation;

  [[nodiscard]] VesselParams vessel() const {
    try {
      return VesselParams(c, v_r, omega_r, G);
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
  }

  [[nodiscard]] CompensatorConfig compensator() const { return {R_prime, b_prime, M, mu, M_prime, eps_den}; }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const {
    (void)vessel();
    compensator().validate();
    if (Q_prime.rows() != 3 || Q_prime.cols() != 3 || !Q_prime.all_finite() || !is_symmetric(Q_prime, 1e-10) ||
        !is_pos_semidef(Q_prime))
      throw ConfigError("Q_prime must be a 3x3 symmetric positive semidefinite matrix");
    if (R.rows() != 2 || R.cols() != 2 || !R.all_finite() || !is_symmetric(R, 1e-10) || !is_pos_def(R))
      throw ConfigError("R must be a 2x2 symmetric positive definite matrix");
    if (!x0.finite()) throw ConfigError("x0 must be finite");
    const SimulationBlock& s = simulation;
    if (!(s.T > 0.0)) throw ConfigError("simulation.T must be positive");
    if (!(s.dt > 0.0) || s.dt > s.T) throw ConfigError("simulation.dt must lie in (0, T]");
    if (s.n_paths == 0) throw ConfigError("simulation.n_paths must be >= 1");
    if (s.record_stride == 0) throw ConfigError("simulation.record_stride must be >= 1");
  }

  /// Solves the LQ design and bundles everything the controllers need.
  [[nodiscard]] ClosedLoop closed_loop() const {
    validate();
    const VesselParams p = vessel();
    return {p, design_lqr(p, Q_prime, R), compensator()};
  }
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return j.at(key);
}

inline double get_number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

inline Vector get_vector(const json& j, const char* key, std::size_t n) {
  const json& v = require(j, key);
  if (!v.is_array() || v.size() != n) throw ConfigError(std::string("'") + key + "' must be an array of " + std::to_string(n) + " numbers");
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number()) throw ConfigError(std::string("'") + key + "' must contain numbers only");
    out[i] = v[i].get<double>();
  }
  return out;
}

inline Matrix get_matrix(const json& j, const char* key, std::size_t rows, std::size_t cols) {
  const json& v = require(j, key);
  const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
  if (!v.is_array() || v.size() != rows) throw ConfigError(std::string("'") + key + "' must be a " + shape + " nested array");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) throw ConfigError(std::string("'") + key + "' must be a " + shape + " nested array");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!v[i][k].is_number()) throw ConfigError(std::string("'") + key + "' must contain numbers only");
      m(i, k) = v[i][k].get<double>();
    }
  }
  return m;
}

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

inline json to_json(const Matrix& m) {
  json out = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(std::move(row));
  }
  return out;
}

inline json to_json(const Vector& v) { return json(v.values()); }

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::get_matrix;
  using detail::get_number;
  using detail::get_vector;
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  detail::reject_unknown(j,
                         {"c", "v_r", "omega_r", "G", "Q_prime", "R", "R_prime", "b_prime", "M", "mu", "M_prime",
                          "eps_den", "x0", "simulation"},
                         "scenario");
  Scenario s;
  s.c = get_number(j, "c");
  s.v_r = get_number(j, "v_r");
  s.omega_r = get_number(j, "omega_r");
  s.G = get_vector(j, "G", 3);
  s.Q_prime = get_matrix(j, "Q_prime", 3, 3);
  s.R = get_matrix(j, "R", 2, 2);
  s.R_prime = get_matrix(j, "R_prime", 2, 2);
  s.b_prime = get_number(j, "b_prime");
  s.M = get_number(j, "M");
  s.mu = get_number(j, "mu");
  s.M_prime = get_number(j, "M_prime");
  if (j.contains("eps_den")) s.eps_den = get_number(j, "eps_den");
  s.x0 = ErrorState::from(get_vector(j, "x0", 3));
  if (j.contains("simulation")) {
    const auto& sim = j.at("simulation");
    if (!sim.is_object()) throw ConfigError("'simulation' must be an object");
    detail::reject_unknown(sim, {"T", "dt", "n_paths", "seed", "mode", "stop_on_exit", "record_stride"}, "simulation");
    SimulationBlock& b = s.simulation;
    if (sim.contains("T")) b.T = get_number(sim, "T");
    if (sim.contains("dt")) b.dt = get_number(sim, "dt");
    if (sim.contains("n_paths")) {
      if (!sim["n_paths"].is_number_unsigned()) throw ConfigError("'n_paths' must be a non-negative integer");
      b.n_paths = sim["n_paths"].get<std::size_t>();
    }
    if (sim.contains("seed")) {
      if (!sim["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
      b.seed = sim["seed"].get<std::uint64_t>();
    }
    if (sim.contains("mode")) {
      if (!sim["mode"].is_string()) throw ConfigError("'mode' must be a string");
      b.mode = parse_mode(sim["mode"].get<std::string>());
    }
    if (sim.contains("stop_on_exit")) {
      if (!sim["stop_on_exit"].is_boolean()) throw ConfigError("'stop_on_exit' must be a boolean");
      b.stop_on_exit = sim["stop_on_exit"].get<bool>();
    }
    if (sim.contains("record_stride")) {
      if (!sim["record_stride"].is_number_unsigned()) throw ConfigError("'record_stride' must be a positive integer");
      b.record_stride = sim["record_stride"].get<std::size_t>();
    }
  }
  s.validate();
  return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using detail::to_json;
  nlohmann::json j;
  j["c"] = s.c;
  j["v_r"] = s.v_r;
  j["omega_r"] = s.omega_r;
  j["G"] = to_json(s.G);
  j["Q_prime"] = to_json(s.Q_prime);
  j["R"] = to_json(s.R);
  j["R_prime"] = to_json(s.R_prime);
  j["b_prime"] = s.b_prime;
  j["M"] = s.M;
  j["mu"] = s.mu;
  j["M_prime"] = s.M_prime;
  j["eps_den"] = s.eps_den;
  j["x0"] = to_json(s.x0.vec());
  const SimulationBlock& b = s.simulation;
  j["simulation"] = {{"T", b.T},
                     {"dt", b.dt},
                     {"n_paths", b.n_paths},
                     {"seed", b.seed},
                     {"mode", std::string(to_string(b.mode))},
                     {"stop_on_exit", b.stop_on_exit},
                     {"record_stride", b.record_stride}};
  return j;
}

/// Parses scenario text; syntax errors report line and column.
inline Scenario parse_scenario(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline constexpr std::string_view kPaperSec7Json = R"({
  "c": 3.0,
  "v_r": 1.0,
  "omega_r": 0.1,
  "G": [0.08, 0.08, 0.08],
  "Q_prime": [[0.1, 0.0, 0.0], [0.0, 0.3, 0.0], [0.0, 0.0, 0.2]],
  "R": [[40.0, 0.0], [0.0, 40.0]],
  "R_prime": [[15.0, 0.0], [0.0, 15.0]],
  "b_prime": 3.0,
  "M": 10.0,
  "mu": 1.0,
  "M_prime": 9.0,
  "eps_den": 1e-10,
  "x0": [0.5, 0.5, 0.0],
  "simulation": {
    "T": 100.0,
    "dt": 0.001,
    "n_paths": 10,
    "seed": 1,
    "mode": "tra",
    "stop_on_exit": false,
    "record_stride": 10
  }
}
)";

inline Scenario preset(std::string_view name) {
  if (name == "paper-sec7") return parse_scenario(kPaperSec7Json);
  throw ConfigError("unknown preset '" + std::string(name) + "' (available: paper-sec7)");
}

}  // namespace szcbf
