#include "inchworm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "inchworm/errors.hpp"
#include "inchworm/ode_mc.hpp"
#include "inchworm/parallel.hpp"
#include "inchworm/rng.hpp"
#include "inchworm/stats.hpp"

namespace inchworm {

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::OdeConvergence, "ode-convergence"},
    {ExperimentKind::OdeErrorGrowth, "ode-error-growth"},
    {ExperimentKind::InchwormConvergence, "inchworm-convergence"},
    {ExperimentKind::InchwormErrorGrowth, "inchworm-error-growth"},
    {ExperimentKind::Observable, "observable"},
    {ExperimentKind::BoundsOverlay, "bounds-eval"},
};

}  // namespace

std::string experiment_name(ExperimentKind kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "unknown";
}

ExperimentKind parse_experiment(const std::string& name) {
  for (const auto& k : kKindNames)
    if (name == k.name) return k.kind;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::size_t ExperimentConfig::n_exp(int steps, int ns_value) const {
  const double n = std::round(n_exp_multiplier * steps * ns_value);
  return std::max<std::size_t>(2, static_cast<std::size_t>(n));
}

namespace {

int steps_for(double t, double h, const char* what) {
  const double n = t / h;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-9 * std::max(1.0, n))
    throw ConfigError(std::string(what) + ": time " + std::to_string(t) +
                      " is not a positive multiple of h = " + std::to_string(h));
  return static_cast<int>(r);
}

void check_series(const std::vector<SeriesPoint>& series, const char* name) {
  for (const auto& p : series)
    if (!(p.h > 0.0) || p.ns < 1)
      throw ConfigError(std::string("grid.") + name + ": every (h, Ns) pair must be positive");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(n_exp_multiplier > 0.0)) throw ConfigError("n_exp_multiplier must be positive");
  if (bath.modes < 1 || !(bath.xi >= 0.0) || !(bath.omega_c > 0.0) || !(bath.omega_max > 0.0) ||
      !(bath.beta > 0.0))
    throw ConfigError("bath: modes >= 1, xi >= 0 and positive omega_c, omega_max, beta required");
  check_series(h_series, "h_series");
  check_series(ns_series, "ns_series");
  if (!(divergence_guard > 0.0)) throw ConfigError("grid.divergence_guard must be positive");
  for (int m : mbar)
    if (m != 1 && m != 3) throw ConfigError("grid.mbar entries must be 1 or 3");
  for (int n : ns)
    if (n < 1) throw ConfigError("grid.ns entries must be >= 1");

  switch (experiment) {
    case ExperimentKind::OdeConvergence:
    case ExperimentKind::InchwormConvergence: {
      if (h_series.empty() && ns_series.empty())
        throw ConfigError("convergence experiments need grid.h_series or grid.ns_series");
      const double horizon = experiment == ExperimentKind::OdeConvergence ? T : t_final;
      for (const auto* series : {&h_series, &ns_series})
        for (const auto& p : *series) {
          steps_for(horizon, p.h, "grid");
          for (double t : times) {
            if (!(t > 0.0) || t > horizon + 1e-12)
              throw ConfigError("grid.times must lie in (0, horizon]");
            steps_for(t, p.h, "grid.times");
          }
        }
      if (experiment == ExperimentKind::InchwormConvergence && mbar.size() != 1)
        throw ConfigError("inchworm-convergence takes a single grid.mbar value");
      break;
    }
    case ExperimentKind::OdeErrorGrowth:
      steps_for(T, h, "grid.T");
      if (ns.empty()) throw ConfigError("grid.ns must not be empty");
      break;
    case ExperimentKind::InchwormErrorGrowth:
    case ExperimentKind::Observable:
      steps_for(t_final, h, "grid.t_final");
      if (ns.empty() || mbar.empty()) throw ConfigError("grid.ns and grid.mbar must not be empty");
      if (h > 1.0) throw ConfigError("grid.h must not exceed 1");
      if (mode == SolveMode::Deterministic)
        for (int m : mbar)
          if (m != 1) throw ConfigError("deterministic mode supports mbar = 1 only");
      break;
    case ExperimentKind::BoundsOverlay:
      try {
        constants.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid.constants: ") + e.what());
      }
      if (points < 2) throw ConfigError("grid.points must be >= 2");
      if (!(t_final > 0.0)) throw ConfigError("grid.t_final must be positive");
      if (h_series.empty() || ns.empty())
        throw ConfigError("bounds-eval needs grid.h_series[0].h and grid.ns[0]");
      break;
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::OdeConvergence:
      c.K = 1.0;
      c.T = 1.0;
      for (double inv : {2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) c.h_series.push_back({1.0 / inv, 100});
      for (int ns : {100, 200, 400, 800, 1600, 3200}) c.ns_series.push_back({0.25, ns});
      c.n_exp_multiplier = 100.0;
      break;
    case ExperimentKind::OdeErrorGrowth:
      c.K = 3.0;
      c.T = 3.0;
      c.h = 0.25;
      c.ns = {1, 10, 100};
      c.n_exp_multiplier = 100.0;
      break;
    case ExperimentKind::InchwormConvergence:
      for (double inv : {10.0, 12.0, 14.0, 16.0, 18.0, 20.0}) c.h_series.push_back({1.0 / inv, 2});
      for (int ns : {1, 2, 4, 8, 16, 32}) c.ns_series.push_back({0.25, ns});
      c.t_final = 1.0;
      c.mbar = {1};
      c.n_exp_multiplier = 100.0;
      break;
    case ExperimentKind::InchwormErrorGrowth:
      c.h = 0.125;
      c.t_final = 6.0;
      c.ns = {4};
      c.mbar = {1, 3};
      // The growth regime is exactly where the norm leaves the bounded scale;
      // the default guard would discard most Mbar=3 replications past t = 4.
      c.divergence_guard = 1e6;
      c.n_exp_multiplier = 7.0;
      break;
    case ExperimentKind::Observable:
      c.h = 0.125;
      c.t_final = 2.0;
      c.ns = {10000};
      c.mbar = {1, 3};
      c.n_exp_multiplier = 1.0;
      break;
    case ExperimentKind::BoundsOverlay:
      c.t_final = 1.0;
      c.h_series = {{0.125, 4}};
      c.ns = {4};
      c.points = 101;
      break;
  }
  return c;
}

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_series(const json& obj, const char* key, std::vector<SeriesPoint>& out) {
  if (!obj.contains(key)) return;
  const json& arr = obj.at(key);
  if (!arr.is_array()) throw ConfigError(std::string("grid.") + key + " must be an array of [h, Ns]");
  out.clear();
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number_integer())
      throw ConfigError(std::string("grid.") + key + " entries must be [h, Ns] pairs");
    out.push_back({p[0].get<double>(), p[1].get<int>()});
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, ExperimentKind fallback) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, {"experiment", "system", "bath", "grid", "seed", "n_exp_multiplier"}, "config");
  ExperimentConfig c = default_config(fallback);
  if (doc.contains("experiment")) {
    if (!doc["experiment"].is_string()) throw ConfigError("experiment must be a string");
    c = default_config(parse_experiment(doc["experiment"].get<std::string>()));
  }
  if (doc.contains("system")) {
    const json& s = doc["system"];
    check_keys(s, {"epsilon", "delta"}, "system");
    read(s, "epsilon", c.epsilon, "system");
    read(s, "delta", c.delta, "system");
  }
  if (doc.contains("bath")) {
    const json& b = doc["bath"];
    check_keys(b, {"modes", "xi", "omega_c", "omega_max", "beta", "time"}, "bath");
    read(b, "modes", c.bath.modes, "bath");
    read(b, "xi", c.bath.xi, "bath");
    read(b, "omega_c", c.bath.omega_c, "bath");
    read(b, "omega_max", c.bath.omega_max, "bath");
    read(b, "beta", c.bath.beta, "bath");
    if (b.contains("time")) {
      std::string tm;
      read(b, "time", tm, "bath");
      if (tm == "physical") {
        c.bath.time = BathTime::Physical;
      } else if (tm == "contour") {
        c.bath.time = BathTime::Contour;
      } else {
        throw ConfigError("bath.time must be \"physical\" or \"contour\"");
      }
    }
  }
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    check_keys(g,
               {"h_series", "ns_series", "times", "K", "T", "t_final", "h", "ns", "mbar", "mode",
                "divergence_guard", "constants", "points"},
               "grid");
    read_series(g, "h_series", c.h_series);
    read_series(g, "ns_series", c.ns_series);
    read(g, "times", c.times, "grid");
    read(g, "K", c.K, "grid");
    read(g, "T", c.T, "grid");
    read(g, "t_final", c.t_final, "grid");
    read(g, "h", c.h, "grid");
    read(g, "ns", c.ns, "grid");
    read(g, "mbar", c.mbar, "grid");
    read(g, "divergence_guard", c.divergence_guard, "grid");
    read(g, "points", c.points, "grid");
    if (g.contains("mode")) {
      std::string m;
      read(g, "mode", m, "grid");
      if (m == "mc") {
        c.mode = SolveMode::MonteCarlo;
      } else if (m == "det") {
        c.mode = SolveMode::Deterministic;
      } else {
        throw ConfigError("grid.mode must be \"mc\" or \"det\"");
      }
    }
    if (g.contains("constants")) {
      const json& k = g["constants"];
      check_keys(k, {"W", "G", "Lbar", "H", "Gpp", "Gppp", "mbar"}, "grid.constants");
      read(k, "W", c.constants.W, "grid.constants");
      read(k, "G", c.constants.G, "grid.constants");
      read(k, "Lbar", c.constants.Lbar, "grid.constants");
      read(k, "H", c.constants.H, "grid.constants");
      read(k, "Gpp", c.constants.Gpp, "grid.constants");
      read(k, "Gppp", c.constants.Gppp, "grid.constants");
      read(k, "mbar", c.constants.mbar, "grid.constants");
    }
  }
  read(doc, "seed", c.seed, "config");
  read(doc, "n_exp_multiplier", c.n_exp_multiplier, "config");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback);
}

std::string config_to_json(const ExperimentConfig& c) {
  json g;
  auto series = [](const std::vector<SeriesPoint>& s) {
    json a = json::array();
    for (const auto& p : s) a.push_back({p.h, p.ns});
    return a;
  };
  g["h_series"] = series(c.h_series);
  g["ns_series"] = series(c.ns_series);
  g["times"] = c.times;
  g["K"] = c.K;
  g["T"] = c.T;
  g["t_final"] = c.t_final;
  g["h"] = c.h;
  g["ns"] = c.ns;
  g["mbar"] = c.mbar;
  g["mode"] = c.mode == SolveMode::MonteCarlo ? "mc" : "det";
  g["divergence_guard"] = c.divergence_guard;
  g["constants"] = {{"W", c.constants.W},     {"G", c.constants.G},
                    {"Lbar", c.constants.Lbar}, {"H", c.constants.H},
                    {"Gpp", c.constants.Gpp}, {"Gppp", c.constants.Gppp},
                    {"mbar", c.constants.mbar}};
  g["points"] = c.points;
  json doc;
  doc["experiment"] = experiment_name(c.experiment);
  doc["system"] = {{"epsilon", c.epsilon}, {"delta", c.delta}};
  doc["bath"] = {{"modes", c.bath.modes},         {"xi", c.bath.xi},
                 {"omega_c", c.bath.omega_c},     {"omega_max", c.bath.omega_max},
                 {"beta", c.bath.beta},
                 {"time", c.bath.time == BathTime::Physical ? "physical" : "contour"}};
  doc["grid"] = g;
  doc["seed"] = c.seed;
  doc["n_exp_multiplier"] = c.n_exp_multiplier;
  return doc.dump(2);
}

SystemSpec make_system(const ExperimentConfig& config) {
  return SystemSpec::spin_boson(config.epsilon, config.delta);
}

BathSpec make_bath(const ExperimentConfig& config) {
  const BathParams& b = config.bath;
  return build_bath(b.modes, b.xi, b.omega_c, b.omega_max, b.beta);
}

namespace {

struct ReplicationBlock {
  std::vector<MatrixMoments> moments;
  std::vector<Complex> obs_sum;
  std::size_t divergent = 0;
  double max_norm = 0.0;
  std::exception_ptr error;
};

}  // namespace

ReplicationResult run_inchworm_replications(const SystemSpec& system, const BathCorrelation& bath,
                                            const SchemeConfig& scheme, std::size_t n_exp,
                                            bool keep_samples) {
  const InchwormSolver solver(system, bath, scheme);
  const int n = scheme.N;
  const auto width = static_cast<std::size_t>(n) + 1;
  ReplicationResult res;
  res.N = n;
  res.h = scheme.h();
  res.ns = scheme.ns;
  res.mbar = scheme.mbar;
  res.n_exp = n_exp;
  res.accepted.assign(n_exp, 0);
  if (keep_samples) res.samples.assign(n_exp * width, ComplexMat2::zero());

  ReplicationBlock init;
  init.moments.resize(width);
  init.obs_sum.resize(width);
  const auto blocks = blocked_reduce(n_exp, init, [&](std::size_t begin, std::size_t end,
                                                      ReplicationBlock& acc) {
    for (std::size_t r = begin; r < end; ++r) {
      try {
        const PropagatorGrid grid = solver.solve_serial(r);
        for (std::size_t j = 0; j < width; ++j) {
          const ComplexMat2& g = observable_propagator(grid, static_cast<int>(j));
          acc.moments[j].add(g);
          acc.obs_sum[j] += g.a11();
          if (keep_samples) res.samples[r * width + j] = g;
        }
        acc.max_norm = std::max(acc.max_norm, grid.max_norm());
        res.accepted[r] = 1;
      } catch (const DivergenceError&) {
        ++acc.divergent;
      } catch (...) {
        if (!acc.error) acc.error = std::current_exception();
      }
    }
  });

  std::vector<MatrixMoments> total(width);
  res.mean_obs.assign(width, Complex{});
  for (const auto& b : blocks) {
    if (b.error) std::rethrow_exception(b.error);
    for (std::size_t j = 0; j < width; ++j) {
      total[j].merge(b.moments[j]);
      res.mean_obs[j] += b.obs_sum[j];
    }
    res.divergent += b.divergent;
    res.max_norm = std::max(res.max_norm, b.max_norm);
  }
  res.e.resize(width);
  for (std::size_t j = 0; j < width; ++j) {
    if (total[j].count < 2) {
      res.e[j] = std::nan("");
      continue;
    }
    res.mean_obs[j] /= static_cast<double>(total[j].count);
    const double v = total[j].variance();
    if (v < 0.0) ++res.clamped;
    res.e[j] = std::max(0.0, v);
  }
  return res;
}

double resampled_error(const ReplicationResult& result, int j,
                       const std::vector<std::size_t>& indices) {
  if (result.samples.empty())
    throw std::invalid_argument("resampled_error: replication samples were not kept");
  const auto width = static_cast<std::size_t>(result.N) + 1;
  MatrixMoments m;
  for (std::size_t r : indices)
    if (result.accepted[r]) m.add(result.samples[r * width + static_cast<std::size_t>(j)]);
  return std::max(0.0, m.variance());
}

namespace {

std::uint64_t setting_seed(std::uint64_t seed, std::uint64_t series, std::uint64_t index) {
  Rng r = derive_stream(seed, {series, index});
  return r();
}

BathCorrelation make_correlation(const ExperimentConfig& config, double t_final) {
  return BathCorrelation(make_bath(config), 2.0 * t_final + 1e-9);
}

}  // namespace

ConvergenceTable ode_convergence(const ExperimentConfig& config) {
  config.validate();
  ConvergenceTable table;
  table.times = config.times;
  auto run = [&](const std::vector<SeriesPoint>& series, std::uint64_t tag,
                 std::vector<ConvergenceRow>& rows) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const SeriesPoint& p = series[i];
      ToyModel model{config.K, config.T, p.h, p.ns};
      const std::size_t n_exp = config.n_exp(model.steps(), p.ns);
      const OdeRunStats stats = toy_model_experiment(model, n_exp, setting_seed(config.seed, tag, i));
      ConvergenceRow row{p.h, p.ns, n_exp, 0, {}};
      for (double t : config.times) row.e.push_back(stats.mu[steps_for(t, p.h, "times")]);
      rows.push_back(row);
    }
  };
  run(config.h_series, 1, table.h_rows);
  run(config.ns_series, 2, table.ns_rows);
  return table;
}

ConvergenceTable inchworm_convergence(const ExperimentConfig& config) {
  config.validate();
  const SystemSpec system = make_system(config);
  const BathCorrelation bath = make_correlation(config, config.t_final);
  ConvergenceTable table;
  table.times = config.times;
  auto run = [&](const std::vector<SeriesPoint>& series, std::uint64_t tag,
                 std::vector<ConvergenceRow>& rows) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const SeriesPoint& p = series[i];
      SchemeConfig scheme;
      scheme.N = steps_for(config.t_final, p.h, "t_final");
      scheme.t = config.t_final;
      scheme.ns = p.ns;
      scheme.mbar = config.mbar.front();
      scheme.seed = setting_seed(config.seed, tag, i);
      scheme.mode = SolveMode::MonteCarlo;
      scheme.divergence_guard = config.divergence_guard;
      scheme.bath_time = config.bath.time;
      const std::size_t n_exp = config.n_exp(scheme.N, p.ns);
      const ReplicationResult r = run_inchworm_replications(system, bath, scheme, n_exp);
      ConvergenceRow row{p.h, p.ns, n_exp, r.divergent, {}};
      for (double t : config.times) row.e.push_back(r.e[steps_for(t, p.h, "times")]);
      rows.push_back(row);
    }
  };
  run(config.h_series, 1, table.h_rows);
  run(config.ns_series, 2, table.ns_rows);
  return table;
}

namespace {

std::string format_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

void write_series(std::ostream& os, const char* name, const std::vector<ConvergenceRow>& rows,
                  std::size_t times, OrderKind kind) {
  std::vector<std::vector<std::optional<double>>> orders(times);
  for (std::size_t k = 0; k < times; ++k) {
    std::vector<double> e;
    std::vector<double> p;
    for (const auto& r : rows) {
      e.push_back(r.e[k]);
      p.push_back(kind == OrderKind::StepSize ? r.h : static_cast<double>(r.ns));
    }
    orders[k] = order_of_accuracy(e, p, kind);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << name << ',' << r.h << ',' << r.ns << ',' << r.n_exp << ',' << r.divergent;
    for (std::size_t k = 0; k < times; ++k) {
      os << ',' << r.e[k] << ',';
      if (orders[k][i]) {
        os << *orders[k][i];
      } else {
        os << "--";
      }
    }
    os << '\n';
  }
}

}  // namespace

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "series,h,ns,n_exp,divergent";
  for (double t : table.times) os << ",e_" << format_time(t) << ",order_" << format_time(t);
  os << '\n';
  const auto old = os.precision(10);
  write_series(os, "h", table.h_rows, table.times.size(), OrderKind::StepSize);
  write_series(os, "ns", table.ns_rows, table.times.size(), OrderKind::SampleCount);
  os.precision(old);
}

std::vector<GrowthCurve> ode_error_growth(const ExperimentConfig& config) {
  config.validate();
  std::vector<GrowthCurve> curves;
  for (std::size_t i = 0; i < config.ns.size(); ++i) {
    ToyModel model{config.K, config.T, config.h, config.ns[i]};
    GrowthCurve c;
    c.label = "K=" + format_time(config.K) + " Ns=" + std::to_string(config.ns[i]);
    c.h = config.h;
    c.ns = config.ns[i];
    c.n_exp = config.n_exp(model.steps(), c.ns);
    const OdeRunStats stats = toy_model_experiment(model, c.n_exp, setting_seed(config.seed, 3, i));
    for (std::size_t n = 0; n < stats.mu.size(); ++n) {
      c.t.push_back(static_cast<double>(n) * config.h);
      c.e.push_back(stats.mu[n]);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

std::vector<GrowthCurve> inchworm_error_growth(const ExperimentConfig& config) {
  config.validate();
  const SystemSpec system = make_system(config);
  const BathCorrelation bath = make_correlation(config, config.t_final);
  std::vector<GrowthCurve> curves;
  std::uint64_t index = 0;
  for (int ns : config.ns)
    for (int mbar : config.mbar) {
      SchemeConfig scheme;
      scheme.N = steps_for(config.t_final, config.h, "t_final");
      scheme.t = config.t_final;
      scheme.ns = ns;
      scheme.mbar = mbar;
      scheme.seed = setting_seed(config.seed, 4, index++);
      scheme.divergence_guard = config.divergence_guard;
      scheme.bath_time = config.bath.time;
      GrowthCurve c;
      c.label = "Mbar=" + std::to_string(mbar) + " Ns=" + std::to_string(ns);
      c.h = config.h;
      c.ns = ns;
      c.mbar = mbar;
      c.n_exp = config.n_exp(scheme.N, ns);
      const ReplicationResult r = run_inchworm_replications(system, bath, scheme, c.n_exp);
      c.divergent = r.divergent;
      c.clamped = r.clamped;
      c.max_norm = r.max_norm;
      for (int j = 0; j <= scheme.N; ++j) {
        c.t.push_back(j * config.h);
        c.e.push_back(r.e[static_cast<std::size_t>(j)]);
      }
      curves.push_back(std::move(c));
    }
  return curves;
}

void write_growth_csv(std::ostream& os, const std::vector<GrowthCurve>& curves) {
  os << "curve,t,e\n";
  const auto old = os.precision(17);
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.t.size(); ++i) os << c.label << ',' << c.t[i] << ',' << c.e[i] << '\n';
  os.precision(old);
}

void write_bounds_csv(std::ostream& os, const ExperimentConfig& config) {
  config.validate();
  const double h = config.h_series.front().h;
  const double ns = config.ns.front();
  os << "t,envelope\n";
  const auto old = os.precision(17);
  for (int k = 0; k < config.points; ++k) {
    const double t = config.t_final * k / (config.points - 1);
    os << t << ',' << error_envelope_mc(config.constants, t, h, ns) << '\n';
  }
  os.precision(old);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_convergence_plot(std::ostream& gp, const std::string& csv, std::size_t times) {
  gp << "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\n"
     << "set xlabel 'h'\nset ylabel 'e'\nset terminal pngcairo size 900,400\n"
     << "set output '" << csv << ".png'\nset multiplot layout 1,2\n";
  gp << "plot";
  for (std::size_t k = 0; k < times; ++k)
    gp << (k ? "," : "") << " '" << csv << "' using ($1 eq \"h\" ? $2 : NaN):" << 6 + 2 * k
       << " with linespoints";
  gp << "\nset xlabel 'Ns'\nplot";
  for (std::size_t k = 0; k < times; ++k)
    gp << (k ? "," : "") << " '" << csv << "' using ($1 eq \"ns\" ? $3 : NaN):" << 6 + 2 * k
       << " with linespoints";
  gp << "\nunset multiplot\n";
}

void write_curves_plot(std::ostream& gp, const std::string& csv,
                       const std::vector<std::string>& labels, bool log_y) {
  gp << "set datafile separator ','\nset xlabel 't'\nset ylabel 'e(t)'\n";
  if (log_y) gp << "set logscale y\n";
  gp << "set terminal pngcairo size 700,500\nset output '" << csv << ".png'\nplot";
  for (std::size_t i = 0; i < labels.size(); ++i)
    gp << (i ? "," : "") << " '" << csv << "' using (strcol(1) eq '" << labels[i]
       << "' ? $2 : NaN):3 with lines title '" << labels[i] << "'";
  gp << '\n';
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const std::string name = experiment_name(config.experiment);
  const std::filesystem::path csv = out_dir / (name + ".csv");
  const std::filesystem::path script = out_dir / (name + ".gp");
  RunSummary summary;
  auto note_rate = [&](std::size_t n_exp, std::size_t divergent) {
    summary.replications += n_exp;
    summary.divergent += divergent;
    if (n_exp)
      summary.worst_divergence_rate = std::max(
          summary.worst_divergence_rate, static_cast<double>(divergent) / static_cast<double>(n_exp));
  };

  switch (config.experiment) {
    case ExperimentKind::OdeConvergence:
    case ExperimentKind::InchwormConvergence: {
      const ConvergenceTable table = config.experiment == ExperimentKind::OdeConvergence
                                         ? ode_convergence(config)
                                         : inchworm_convergence(config);
      for (const auto* rows : {&table.h_rows, &table.ns_rows})
        for (const auto& r : *rows) note_rate(r.n_exp, r.divergent);
      auto out = open_out(csv);
      write_convergence_csv(out, table);
      auto gp = open_out(script);
      write_convergence_plot(gp, csv.filename().string(), table.times.size());
      break;
    }
    case ExperimentKind::OdeErrorGrowth:
    case ExperimentKind::InchwormErrorGrowth: {
      const auto curves = config.experiment == ExperimentKind::OdeErrorGrowth
                              ? ode_error_growth(config)
                              : inchworm_error_growth(config);
      std::vector<std::string> labels;
      for (const auto& c : curves) {
        note_rate(c.n_exp, c.divergent);
        labels.push_back(c.label);
      }
      auto out = open_out(csv);
      write_growth_csv(out, curves);
      auto gp = open_out(script);
      write_curves_plot(gp, csv.filename().string(), labels, true);
      break;
    }
    case ExperimentKind::Observable: {
      const SystemSpec system = make_system(config);
      const BathCorrelation bath = make_correlation(config, config.t_final);
      auto out = open_out(csv);
      out << "curve,t,re_sigma_z,im_sigma_z\n";
      out.precision(17);
      std::vector<std::string> labels;
      std::uint64_t index = 0;
      for (int ns : config.ns)
        for (int mbar : config.mbar) {
          SchemeConfig scheme;
          scheme.N = steps_for(config.t_final, config.h, "t_final");
          scheme.t = config.t_final;
          scheme.ns = ns;
          scheme.mbar = mbar;
          scheme.mode = config.mode;
          scheme.seed = setting_seed(config.seed, 5, index++);
          scheme.divergence_guard = config.divergence_guard;
          scheme.bath_time = config.bath.time;
          const InchwormSolver solver(system, bath, scheme);
          const PropagatorGrid grid = solver.solve();
          const std::string label = "Mbar=" + std::to_string(mbar) + " Ns=" + std::to_string(ns);
          labels.push_back(label);
          for (int j = 0; j <= scheme.N; ++j) {
            const Complex z = observable_trace(grid, j);
            out << label << ',' << j * config.h << ',' << z.real() << ',' << z.imag() << '\n';
          }
          note_rate(1, 0);
        }
      auto gp = open_out(script);
      write_curves_plot(gp, csv.filename().string(), labels, false);
      break;
    }
    case ExperimentKind::BoundsOverlay: {
      auto out = open_out(csv);
      write_bounds_csv(out, config);
      auto gp = open_out(script);
      gp << "set datafile separator ','\nset key autotitle columnhead\nset logscale y\n"
         << "set xlabel 't'\nset terminal pngcairo size 700,500\nset output '"
         << csv.filename().string() << ".png'\nplot '" << csv.filename().string()
         << "' using 1:2 with lines\n";
      break;
    }
  }
  summary.files = {csv, script};
  return summary;
}

}  // namespace inchworm
