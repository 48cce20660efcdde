#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "szcbf/errors.hpp"
#include "szcbf/report.hpp"
#include "szcbf/scenario.hpp"

namespace {

struct CommonOptions {
  std::string scenario_file;
  std::string preset_name;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> horizon;
  std::optional<double> dt;
  std::optional<std::string> mode;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_out) {
  auto* scen = cmd->add_option("--scenario", o.scenario_file, "Scenario JSON file");
  auto* pre = cmd->add_option("--preset", o.preset_name, "Built-in scenario (paper-sec7)");
  scen->excludes(pre);
  auto* out = cmd->add_option("--out", o.out_dir, "Output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", o.seed, "Base RNG seed");
  cmd->add_option("--paths", o.paths, "Number of sample paths")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", o.horizon, "Simulation horizon T [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--dt", o.dt, "Euler-Maruyama step [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", o.mode, "Controller: tra, tra+com or tra+nlc");
  cmd->add_option("--threads", o.threads, "Worker threads for ensembles (0 = all cores)");
}

szcbf::Scenario resolve(const CommonOptions& o) {
  if (o.scenario_file.empty() && o.preset_name.empty())
    throw szcbf::ConfigError("one of --scenario or --preset is required");
  szcbf::Scenario s = o.scenario_file.empty() ? szcbf::preset(o.preset_name) : szcbf::load_scenario(o.scenario_file);
  if (o.seed) s.simulation.seed = *o.seed;
  if (o.paths) s.simulation.n_paths = *o.paths;
  if (o.horizon) s.simulation.T = *o.horizon;
  if (o.dt) s.simulation.dt = *o.dt;
  if (o.mode) s.simulation.mode = szcbf::parse_mode(*o.mode);
  s.validate();
  return s;
}

int cmd_certify(const CommonOptions& o) {
  const szcbf::Scenario s = resolve(o);
  const auto res = szcbf::run_certify(s);
  const std::string text = res.document.dump(2) + "\n";
  if (!o.out_dir.empty()) {
    szcbf::ensure_dir(o.out_dir);
    szcbf::write_text(szcbf::fs::path(o.out_dir) / "certificate.json", text);
  }
  std::cout << text;
  for (const auto& w : res.certificate.warnings) std::cerr << "warning: " << w << "\n";
  if (!res.certificate.feasible) {
    std::cerr << "error: infeasible certificate, M-mu > " << szcbf::format_number(res.certificate.threshold, 3)
              << " required (have " << szcbf::format_number(s.M - s.mu, 3) << ")\n";
    return szcbf::kExitValidation;
  }
  return szcbf::kExitOk;
}

int cmd_simulate(const CommonOptions& o) {
  const szcbf::Scenario s = resolve(o);
  const auto res = szcbf::run_simulate(s, o.out_dir);
  std::size_t exited = 0;
  for (const auto& p : res.paths) exited += p.exited ? 1 : 0;
  std::cout << "wrote " << res.paths.size() << " paths (" << exited << " left the safe set), path_det.csv, "
            << "global_det.csv, boundary.csv, design.json to " << o.out_dir << "\n";
  return szcbf::kExitOk;
}

int cmd_mc(const CommonOptions& o) {
  const szcbf::Scenario s = resolve(o);
  const auto cmp = szcbf::run_mc(s, o.out_dir, o.threads);
  std::cout << szcbf::comparison_table_csv(cmp);
  for (const auto& w : cmp.certificate.warnings) std::cerr << "warning: " << w << "\n";
  return szcbf::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic ZCBF safety certificates and Monte-Carlo validation for vessel tracking"};
  app.require_subcommand(1);
  CommonOptions certify_opts, simulate_opts, mc_opts;
  auto* certify = app.add_subcommand("certify", "LQ design, safety rates and probability lower bounds");
  add_common(certify, certify_opts, false);
  auto* simulate = app.add_subcommand("simulate", "Sample paths, noise-free path and safe-set boundary as CSV");
  add_common(simulate, simulate_opts, true);
  auto* mc = app.add_subcommand("mc", "Monte-Carlo safety estimate for all three controllers");
  add_common(mc, mc_opts, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (certify->parsed()) return cmd_certify(certify_opts);
    if (simulate->parsed()) return cmd_simulate(simulate_opts);
    if (mc->parsed()) return cmd_mc(mc_opts);
  } catch (const szcbf::Infeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return szcbf::kExitValidation;
  } catch (const szcbf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return szcbf::kExitValidation;
  } catch (const szcbf::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return szcbf::kExitValidation;
  } catch (const szcbf::SolverFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return szcbf::kExitNumerical;
  } catch (const szcbf::NoSolution& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return szcbf::kExitNumerical;
  } catch (const szcbf::NumericalBlowup& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return szcbf::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
