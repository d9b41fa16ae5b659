#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "inchworm/algebra.hpp"
#include "inchworm/bath.hpp"
#include "inchworm/bounds.hpp"
#include "inchworm/inchworm.hpp"

namespace inchworm {

enum class ExperimentKind {
  OdeConvergence,
  OdeErrorGrowth,
  InchwormConvergence,
  InchwormErrorGrowth,
  Observable,
  BoundsOverlay,
};

// "ode-convergence", "ode-error-growth", "inchworm-convergence",
// "inchworm-error-growth", "observable", "bounds-eval".
std::string experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);  // throws ConfigError

struct SeriesPoint {
  double h = 0.25;
  int ns = 1;
};

struct BathParams {
  int modes = 200;
  double xi = 0.6;
  double omega_c = 3.0;
  double omega_max = 12.0;
  double beta = 5.0;
  BathTime time = BathTime::Physical;  // "physical" or "contour"
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::InchwormConvergence;

  // system
  double epsilon = 1.0;
  double delta = 1.0;

  BathParams bath;

  // grid
  std::vector<SeriesPoint> h_series;   // order in h at fixed Ns
  std::vector<SeriesPoint> ns_series;  // order in Ns at fixed h
  std::vector<double> times{0.5, 1.0};  // where convergence tables read e(t)
  double K = 1.0;                       // toy model rate
  double T = 1.0;                       // toy model horizon
  double t_final = 1.0;                 // inchworm observation time
  double h = 0.125;                     // step for growth / observable runs
  std::vector<int> ns{4};               // sample counts for growth / observable runs
  std::vector<int> mbar{1};             // truncation orders
  SolveMode mode = SolveMode::MonteCarlo;
  double divergence_guard = 10.0 * std::sqrt(2.0);
  BoundConstants constants;             // bounds-eval
  int points = 101;                     // bounds-eval samples on [0, t_final]

  std::uint64_t seed = 0;
  double n_exp_multiplier = 100.0;  // N_exp = multiplier * N * Ns

  std::size_t n_exp(int steps, int ns_value) const;
  void validate() const;  // throws ConfigError
};

// Desk-scale preset for each experiment, following the published setups.
ExperimentConfig default_config(ExperimentKind kind);

/// Reads a JSON config. Top-level keys: experiment, system, bath, grid, seed,
/// n_exp_multiplier; missing keys keep the preset of the named experiment.
/// Unknown keys and ill-typed values throw ConfigError. Without an
/// "experiment" key the preset of `fallback` applies.
ExperimentConfig parse_config(const std::string& json_text,
                              ExperimentKind fallback = ExperimentKind::InchwormConvergence);
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentKind fallback = ExperimentKind::InchwormConvergence);
std::string config_to_json(const ExperimentConfig& config);

SystemSpec make_system(const ExperimentConfig& config);
BathSpec make_bath(const ExperimentConfig& config);

// Statistics of N_exp independent inchworm solves along the observable
// anti-diagonal G(N+j, N-j), j = 0..N.
struct ReplicationResult {
  int N = 0;
  double h = 0.0;
  int ns = 0;
  int mbar = 1;
  std::size_t n_exp = 0;
  std::size_t divergent = 0;
  std::size_t clamped = 0;       // negative variance estimates set to 0
  std::vector<double> e;         // e(jh) = unbiased variance of G(N+j, N-j)
  std::vector<Complex> mean_obs; // mean of the (1,1) entry
  double max_norm = 0.0;         // largest ||G|| over all accepted grids
  // Per-replication G(N+j, N-j), row-major n_exp x (N+1), kept on request.
  std::vector<ComplexMat2> samples;
  std::vector<unsigned char> accepted;

  double divergence_rate() const {
    return n_exp ? static_cast<double>(divergent) / static_cast<double>(n_exp) : 0.0;
  }
};

/// Replication r solves with slope streams keyed by (scheme.seed, r); the
/// replications run in parallel with the grid filled serially inside each.
/// Diverging replications are counted and left out of the statistics.
ReplicationResult run_inchworm_replications(const SystemSpec& system, const BathCorrelation& bath,
                                            const SchemeConfig& scheme, std::size_t n_exp,
                                            bool keep_samples = false);

// e(jh) recomputed from stored samples over a resample of replication indices.
double resampled_error(const ReplicationResult& result, int j,
                       const std::vector<std::size_t>& indices);

struct ConvergenceRow {
  double h = 0.0;
  int ns = 0;
  std::size_t n_exp = 0;
  std::size_t divergent = 0;
  std::vector<double> e;  // one entry per evaluation time
};

struct ConvergenceTable {
  std::vector<double> times;
  std::vector<ConvergenceRow> h_rows;
  std::vector<ConvergenceRow> ns_rows;
};

ConvergenceTable ode_convergence(const ExperimentConfig& config);
ConvergenceTable inchworm_convergence(const ExperimentConfig& config);

// "series,h,ns,n_exp,divergent,e_<t>,order_<t>,..."; undefined orders print "--".
void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);

struct GrowthCurve {
  std::string label;
  double h = 0.0;
  int ns = 0;
  int mbar = 1;
  std::size_t n_exp = 0;
  std::size_t divergent = 0;
  std::size_t clamped = 0;
  double max_norm = 0.0;
  std::vector<double> t;
  std::vector<double> e;
};

std::vector<GrowthCurve> ode_error_growth(const ExperimentConfig& config);
std::vector<GrowthCurve> inchworm_error_growth(const ExperimentConfig& config);

// "curve,t,e".
void write_growth_csv(std::ostream& os, const std::vector<GrowthCurve>& curves);

// "t,envelope" on `points` equally spaced times in [0, t_final], at the first
// h_series step and ns value.
void write_bounds_csv(std::ostream& os, const ExperimentConfig& config);

struct RunSummary {
  std::vector<std::filesystem::path> files;
  std::size_t replications = 0;
  std::size_t divergent = 0;
  // Largest per-setting divergence rate.
  double worst_divergence_rate = 0.0;
};

/// Runs the experiment, writing <name>.csv and a gnuplot script <name>.gp to
/// `out_dir`. The caller decides what a divergence rate above 1% means.
RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

inline constexpr double kMaxDivergenceRate = 0.01;

}  // namespace inchworm
