#pragma once

// Document writers behind the `certify`, `simulate` and `mc` subcommands.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "szcbf/control.hpp"
#include "szcbf/montecarlo.hpp"
#include "szcbf/safety.hpp"
#include "szcbf/scenario.hpp"
#include "szcbf/sde.hpp"

namespace szcbf {

namespace fs = std::filesystem;

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json design_to_json(const ClosedLoop& cl) {
  using detail::to_json;
  return {{"A", to_json(cl.lqr.A)},       {"B", to_json(cl.lqr.B)},       {"Q_prime", to_json(cl.lqr.Qprime)},
          {"R", to_json(cl.lqr.R)},       {"P", to_json(cl.lqr.P)},       {"K", to_json(cl.lqr.K)},
          {"Abar", to_json(cl.lqr.Abar)}, {"Q_eff", to_json(cl.lqr.Qeff)}, {"G", to_json(cl.vessel.G())},
          {"R_prime", to_json(cl.comp.Rprime)}};
}

inline nlohmann::json certificate_to_json(const SafetyCertificate& c, const ClosedLoop& cl, const ErrorState& x0) {
  nlohmann::json j;
  j["design"] = design_to_json(cl);
  j["M"] = c.M;
  j["mu"] = c.mu;
  j["b_prime"] = c.b_prime;
  j["M_prime"] = cl.comp.M_prime;
  j["deterministic"] = c.deterministic;
  j["feasible"] = c.feasible;
  j["L"] = c.L;
  j["M_minus_mu_threshold"] = c.threshold;
  j["b"] = optional_number(c.b);
  j["b_plus_projection"] = optional_number(c.b_plus_projection);
  j["b_plus_rigorous"] = optional_number(c.b_plus_rigorous);
  j["prob_tra"] = c.prob_tra;
  j["prob_com"] = c.prob_com;
  j["prob_nlc"] = c.prob_nlc;
  j["x0"] = detail::to_json(x0.vec());
  j["h_x0"] = h(x0, cl.barrier());
  j["warnings"] = c.warnings;
  return j;
}

inline nlohmann::json report_to_json(const McReport& r) {
  nlohmann::json q = nlohmann::json::object();
  for (std::size_t i = 0; i < kMinHQuantiles.size(); ++i) {
    char key[16];
    std::snprintf(key, sizeof key, "q%02d", static_cast<int>(std::lround(kMinHQuantiles[i] * 100)));
    q[key] = r.min_h_quantiles[i];
  }
  return {{"mode", std::string(to_string(r.mode))},
          {"n_paths", r.n_paths},
          {"n_safe", r.n_safe},
          {"safe_fraction", r.safe_fraction},
          {"wilson_lo", r.wilson_lo},
          {"wilson_hi", r.wilson_hi},
          {"theoretical_lb", r.theoretical_lb},
          {"min_h_distribution", q},
          {"T", r.T},
          {"dt", r.dt},
          {"seed", r.seed},
          {"horizon_note", kHorizonNote},
          {"warnings", r.warnings}};
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kTrajectoryHeader =
    "t,x_e,y_e,theta_e,h,v_cmd,omega_cmd,v_compensator,omega_compensator\n";

inline std::string trajectory_csv(const SamplePath& p) {
  std::string out = kTrajectoryHeader;
  out.reserve(p.size() * 200);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const ErrorState& x = p.states[k];
    const ControlInput& u = p.inputs[k];
    const ControlInput& c = p.compensator[k];
    for (double v : {p.times[k], x.x_e, x.y_e, x.theta_e, p.h_values[k], u.v, u.omega, c.v, c.omega}) {
      out += fmt17(v);
      out += ',';
    }
    out.back() = '\n';
  }
  return out;
}

/// Level sets h = 0 and h = mu of the barrier, sampled on the theta_e = 0 slice.
inline std::string boundary_csv(const Zcbf& z, double mu, std::size_t n_points = 360) {
  std::string out = "# theta_e = 0 slice of the level sets x^T P x = M - h\nset,h,x_e,y_e,theta_e\n";
  const Matrix& P = z.P();
  struct Level {
    const char* name;
    double hv;
  };
  for (const Level lv : {Level{"safe_set", 0.0}, Level{"initial_set", mu}}) {
    const double level = z.M() - lv.hv;
    for (std::size_t i = 0; i < n_points; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_points);
      const double dx = std::cos(a);
      const double dy = std::sin(a);
      const double q = P(0, 0) * dx * dx + 2.0 * P(0, 1) * dx * dy + P(1, 1) * dy * dy;
      const double r = std::sqrt(level / q);
      out += std::string(lv.name) + "," + fmt17(lv.hv) + "," + fmt17(r * dx) + "," + fmt17(r * dy) + ",0\n";
    }
  }
  return out;
}

/// Global-frame reconstruction of a path against the reference trajectory.
inline std::string global_csv(const SamplePath& p, const VesselParams& vp, const GlobalPose& r0) {
  std::string out = "t,x_r,y_r,theta_r,x_glo,y_glo,theta_glo\n";
  GlobalPose ref = r0;
  std::size_t k_ref = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::llround(p.times[i] / p.dt));
    for (; k_ref < k; ++k_ref) ref = reference_step(ref, vp, p.dt);
    const GlobalPose g = global_from_error(ref, p.states[i]);
    for (double v : {p.times[i], ref.x, ref.y, ref.theta, g.x, g.y, g.theta}) {
      out += fmt17(v);
      out += ',';
    }
    out.back() = '\n';
  }
  return out;
}

struct CertifyResult {
  nlohmann::json document;
  SafetyCertificate certificate;
};

inline CertifyResult run_certify(const Scenario& s) {
  const ClosedLoop cl = s.closed_loop();
  SafetyCertificate c = certify(cl);
  return {certificate_to_json(c, cl, s.x0), std::move(c)};
}

struct SimulateResult {
  std::vector<SamplePath> paths;
  SamplePath deterministic;
};

/// Writes path_{id}.csv for every stream, path_det.csv (G = 0), boundary.csv,
/// global_det.csv and design.json into out_dir.
inline SimulateResult run_simulate(const Scenario& s, const fs::path& out_dir) {
  ensure_dir(out_dir);
  const ClosedLoop cl = s.closed_loop();
  const SimulationBlock& sb = s.simulation;
  const SimOptions opt{sb.T, sb.dt, sb.stop_on_exit};
  SimulateResult res;
  for (std::size_t i = 0; i < sb.n_paths; ++i) {
    res.paths.push_back(simulate_path(s.x0, sb.mode, cl, opt, RngStream{sb.seed, i}, sb.record_stride));
    write_text(out_dir / ("path_" + std::to_string(i) + ".csv"), trajectory_csv(res.paths.back()));
  }
  ClosedLoop det = cl;
  det.vessel = cl.vessel.with_G(Vector(3, 0.0));
  res.deterministic = simulate_path(s.x0, sb.mode, det, opt, RngStream{sb.seed, 0}, sb.record_stride);
  write_text(out_dir / "path_det.csv", trajectory_csv(res.deterministic));
  write_text(out_dir / "global_det.csv", global_csv(res.deterministic, cl.vessel, GlobalPose{}));
  write_text(out_dir / "boundary.csv", boundary_csv(cl.barrier(), cl.comp.mu));
  nlohmann::json design = design_to_json(cl);
  design["M"] = cl.comp.M;
  design["mu"] = cl.comp.mu;
  design["mode"] = std::string(to_string(sb.mode));
  design["scenario"] = scenario_to_json(s);
  write_text(out_dir / "design.json", design.dump(2) + "\n");
  return res;
}

inline std::string comparison_table_csv(const ModeComparison& cmp) {
  std::string out = "mode,n_paths,n_safe,safe_fraction,wilson_lo,wilson_hi,theoretical_lb\n";
  for (const McReport& r : cmp.reports) {
    out += std::string(to_string(r.mode)) + "," + std::to_string(r.n_paths) + "," + std::to_string(r.n_safe) + "," +
           fmt17(r.safe_fraction) + "," + fmt17(r.wilson_lo) + "," + fmt17(r.wilson_hi) + "," +
           fmt17(r.theoretical_lb) + "\n";
  }
  return out;
}

inline McConfig mc_config(const Scenario& s) {
  McConfig cfg;
  cfg.n_paths = s.simulation.n_paths;
  cfg.T = s.simulation.T;
  cfg.dt = s.simulation.dt;
  cfg.seed = s.simulation.seed;
  cfg.x0 = s.x0;
  cfg.mode = s.simulation.mode;
  return cfg;
}

/// Writes mc_{mode}.json per mode and comparison.csv into out_dir.
inline ModeComparison run_mc(const Scenario& s, const fs::path& out_dir, unsigned threads = 0) {
  ensure_dir(out_dir);
  McConfig cfg = mc_config(s);
  cfg.threads = threads;
  ModeComparison cmp = compare_modes(cfg, s.closed_loop());
  for (const McReport& r : cmp.reports) {
    std::string name(to_string(r.mode));
    for (char& ch : name)
      if (ch == '+') ch = '_';
    write_text(out_dir / ("mc_" + name + ".json"), report_to_json(r).dump(2) + "\n");
  }
  write_text(out_dir / "comparison.csv", comparison_table_csv(cmp));
  return cmp;
}

}  // namespace szcbf
