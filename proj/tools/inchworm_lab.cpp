// inchworm-lab: experiment runner for the inchworm and stochastic ODE solvers.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 divergence (more than 1% of replications, or a diverging single solve).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "inchworm/bath.hpp"
#include "inchworm/errors.hpp"
#include "inchworm/harness.hpp"
#include "inchworm/inchworm.hpp"
#include "inchworm/parallel.hpp"

namespace {

using namespace inchworm;

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
  int workers = 0;
  std::optional<double> n_exp_multiplier;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--workers", f.workers, "OpenMP threads (0 = runtime default)");
  cmd->add_option("--n-exp-multiplier", f.n_exp_multiplier, "N_exp = multiplier * N * Ns");
}

ExperimentConfig resolve(ExperimentKind kind, const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? default_config(kind) : load_config(f.config, kind);
  if (c.experiment != kind)
    throw ConfigError("config names experiment '" + experiment_name(c.experiment) +
                      "' but the subcommand is '" + experiment_name(kind) + "'");
  if (f.seed) c.seed = *f.seed;
  if (f.n_exp_multiplier) c.n_exp_multiplier = *f.n_exp_multiplier;
  c.validate();
  return c;
}

int run_subcommand(ExperimentKind kind, const CommonFlags& f) {
  set_worker_count(f.workers);
  const ExperimentConfig config = resolve(kind, f);
  const RunSummary s = run_experiment(config, f.out);
  for (const auto& p : s.files) std::cout << "wrote " << p.string() << '\n';
  if (s.divergent > 0)
    std::cerr << "diverged replications: " << s.divergent << " of " << s.replications
              << " (worst setting " << 100.0 * s.worst_divergence_rate << "%)\n";
  return s.worst_divergence_rate > kMaxDivergenceRate ? kExitDivergence : 0;
}

struct SolveFlags {
  int N = 8;
  double t = 1.0;
  int ns = 100;
  int mbar = 1;
  std::uint64_t seed = 0;
  std::string mode = "mc";
  std::string config;
  std::string out;
  std::string grid_out;
  int workers = 0;
};

int run_solve(const SolveFlags& f) {
  set_worker_count(f.workers);
  ExperimentConfig base = f.config.empty()
                              ? default_config(ExperimentKind::Observable)
                              : load_config(f.config, ExperimentKind::Observable);
  SchemeConfig scheme;
  scheme.N = f.N;
  scheme.t = f.t;
  scheme.ns = f.ns;
  scheme.mbar = f.mbar;
  scheme.seed = f.seed;
  scheme.divergence_guard = base.divergence_guard;
  scheme.bath_time = base.bath.time;
  if (f.mode == "mc") {
    scheme.mode = SolveMode::MonteCarlo;
  } else if (f.mode == "det") {
    scheme.mode = SolveMode::Deterministic;
  } else {
    throw ConfigError("--mode must be mc or det");
  }
  try {
    scheme.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const BathCorrelation bath(make_bath(base), 2.0 * scheme.t + 1e-9);
  const InchwormSolver solver(make_system(base), bath, scheme);
  const PropagatorGrid grid = solver.solve();
  if (f.out.empty()) {
    write_observable_csv(std::cout, grid);
  } else {
    std::ofstream out(f.out);
    if (!out) throw std::runtime_error("cannot write " + f.out);
    write_observable_csv(out, grid);
  }
  if (!f.grid_out.empty()) {
    std::ofstream out(f.grid_out);
    if (!out) throw std::runtime_error("cannot write " + f.grid_out);
    write_grid_csv(out, grid);
  }
  return 0;
}

int run_bath_dump(const CommonFlags& f) {
  const ExperimentConfig c = f.config.empty()
                                 ? default_config(ExperimentKind::Observable)
                                 : load_config(f.config, ExperimentKind::Observable);
  std::filesystem::create_directories(f.out);
  const auto path = std::filesystem::path(f.out) / "bath.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_bath_csv(out, make_bath(c));
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inchworm Monte Carlo and stochastic Runge-Kutta experiments"};
  app.require_subcommand(1);

  struct Entry {
    ExperimentKind kind;
    const char* help;
    CommonFlags flags;
    CLI::App* cmd = nullptr;
  };
  Entry entries[] = {
      {ExperimentKind::OdeConvergence, "order table of the toy ODE in h and Ns", {}},
      {ExperimentKind::OdeErrorGrowth, "error growth e(t) of the toy ODE", {}},
      {ExperimentKind::InchwormConvergence, "order table of the inchworm scheme in h and Ns", {}},
      {ExperimentKind::InchwormErrorGrowth, "inchworm error growth e(t) for each Mbar", {}},
      {ExperimentKind::Observable, "Re/Im <sigma_z(t)> from single high-Ns solves", {}},
      {ExperimentKind::BoundsOverlay, "theoretical error envelope on a time grid", {}},
  };
  for (auto& e : entries) {
    e.cmd = app.add_subcommand(experiment_name(e.kind), e.help);
    add_common(e.cmd, e.flags);
  }

  CommonFlags bath_flags;
  CLI::App* bath_cmd = app.add_subcommand("bath-dump", "bath modes omega_l and couplings c_l");
  bath_cmd->add_option("--config", bath_flags.config, "JSON config file (bath block)");
  bath_cmd->add_option("--out", bath_flags.out, "output directory")->capture_default_str();

  SolveFlags solve;
  CLI::App* solve_cmd = app.add_subcommand("inchworm-solve", "one solve; writes the observable");
  solve_cmd->add_option("--N", solve.N, "steps from 0 to t")->capture_default_str();
  solve_cmd->add_option("--t", solve.t, "observation time")->capture_default_str();
  solve_cmd->add_option("--ns", solve.ns, "samples per slope")->capture_default_str();
  solve_cmd->add_option("--mbar", solve.mbar, "truncation order (1 or 3)")->capture_default_str();
  solve_cmd->add_option("--seed", solve.seed, "master seed")->capture_default_str();
  solve_cmd->add_option("--mode", solve.mode, "mc or det")->capture_default_str();
  solve_cmd->add_option("--config", solve.config, "JSON config with system and bath blocks");
  solve_cmd->add_option("--out", solve.out, "observable CSV (default stdout)");
  solve_cmd->add_option("--grid-out", solve.grid_out, "full grid snapshot CSV");
  solve_cmd->add_option("--workers", solve.workers, "OpenMP threads (0 = runtime default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (auto& e : entries)
      if (e.cmd->parsed()) return run_subcommand(e.kind, e.flags);
    if (bath_cmd->parsed()) return run_bath_dump(bath_flags);
    if (solve_cmd->parsed()) return run_solve(solve);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedOrderError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
