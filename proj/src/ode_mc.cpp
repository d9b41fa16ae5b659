#include "inchworm/ode_mc.hpp"

#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "inchworm/parallel.hpp"

namespace inchworm {

void ButcherTableau::validate() const {
  const auto s = static_cast<std::size_t>(stages);
  if (stages < 1 || a.size() != s * s || b.size() != s || c.size() != s)
    throw std::invalid_argument("ButcherTableau: inconsistent stage count");
  for (int i = 0; i < stages; ++i) {
    if (!std::isfinite(b[i]) || !std::isfinite(c[i]))
      throw std::invalid_argument("ButcherTableau: non-finite coefficient");
    for (int j = 0; j < stages; ++j) {
      const double v = coeff(i, j);
      if (!std::isfinite(v)) throw std::invalid_argument("ButcherTableau: non-finite coefficient");
      if (j >= i && v != 0.0)
        throw std::invalid_argument("ButcherTableau: a must be strictly lower triangular");
    }
  }
}

ButcherTableau ButcherTableau::forward_euler() { return {1, {0.0}, {1.0}, {0.0}}; }

ButcherTableau ButcherTableau::heun() {
  return {2, {0.0, 0.0, 1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}};
}

ButcherTableau ButcherTableau::classic_rk4() {
  return {4,
          {0.0, 0.0, 0.0, 0.0,  //
           0.5, 0.0, 0.0, 0.0,  //
           0.0, 0.5, 0.0, 0.0,  //
           0.0, 0.0, 1.0, 0.0},
          {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0},
          {0.0, 0.5, 0.5, 1.0}};
}

namespace detail {

void check_finite_state(const StateVector& u, int step) {
  for (const auto& z : u)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw DivergenceError("solver diverged: non-finite state at step " + std::to_string(step));
}

void axpy(StateVector& y, Complex alpha, const StateVector& x) {
  if (x.size() != y.size()) throw std::invalid_argument("state dimension mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace detail

Trajectory rk_deterministic_solve(const ButcherTableau& tableau, const DeterministicRhs& f,
                                  const StateVector& u0, double h, int steps) {
  tableau.validate();
  if (!(h > 0.0) || steps < 1)
    throw std::invalid_argument("rk_deterministic_solve: need h > 0 and steps >= 1");
  const int s = tableau.stages;
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  traj.push_back(u0);
  std::vector<StateVector> k(static_cast<std::size_t>(s));
  for (int n = 0; n < steps; ++n) {
    const StateVector& un = traj.back();
    for (int i = 0; i < s; ++i) {
      StateVector arg = un;
      for (int j = 0; j < i; ++j)
        if (tableau.coeff(i, j) != 0.0) detail::axpy(arg, h * tableau.coeff(i, j), k[j]);
      k[i] = f(n * h + tableau.c[i] * h, arg);
    }
    StateVector next = un;
    for (int i = 0; i < s; ++i) detail::axpy(next, h * tableau.b[i], k[i]);
    detail::check_finite_state(next, n + 1);
    traj.push_back(std::move(next));
  }
  return traj;
}

int ToyModel::steps() const {
  if (!(h > 0.0) || !(T > 0.0)) throw std::invalid_argument("ToyModel: need h > 0 and T > 0");
  const double n = T / h;
  const long rounded = std::lround(n);
  if (rounded < 1 || std::abs(n - static_cast<double>(rounded)) > 1e-9 * n)
    throw std::invalid_argument("ToyModel: T must be an integer multiple of h");
  return static_cast<int>(rounded);
}

std::vector<Complex> ToyModel::reference() const {
  const double k = K;
  const DeterministicRhs f = [k](double, const StateVector& u) {
    return StateVector{Complex(0.0, -0.5 * k) * u[0]};
  };
  const Trajectory traj = rk_deterministic_solve(ButcherTableau::heun(), f, {1.0}, h, steps());
  std::vector<Complex> out;
  out.reserve(traj.size());
  for (const auto& u : traj) out.push_back(u[0]);
  return out;
}

std::vector<Complex> ToyModel::replicate(Rng& rng) const {
  const int n_steps = steps();
  const double scale = K / ns;
  std::vector<Complex> u(static_cast<std::size_t>(n_steps) + 1);
  Complex v = 1.0;
  u[0] = v;
  for (int n = 0; n < n_steps; ++n) {
    double s1 = 0.0;
    for (int l = 0; l < ns; ++l) s1 += rng.uniform01();
    const Complex k1 = Complex(0.0, -s1 * scale) * v;
    double s2 = 0.0;
    for (int l = 0; l < ns; ++l) s2 += rng.uniform01();
    const Complex k2 = Complex(0.0, -s2 * scale) * (v + h * k1);
    v += 0.5 * h * (k1 + k2);
    u[static_cast<std::size_t>(n) + 1] = v;
  }
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw DivergenceError("toy model replication diverged");
  return u;
}

std::vector<Complex> ToyModel::replicate_generic(Rng& rng) const {
  const double k = K;
  StochasticRhs<double> rhs;
  rhs.sampler = [k](double, Rng& r) { return k * r.uniform01(); };
  rhs.evaluator = [](double, const StateVector& u, const double& x) {
    return StateVector{Complex(0.0, -x) * u[0]};
  };
  const Trajectory traj =
      rk_stochastic_solve(ButcherTableau::heun(), rhs, {1.0}, h, steps(), ns, rng);
  std::vector<Complex> out;
  out.reserve(traj.size());
  for (const auto& u : traj) out.push_back(u[0]);
  return out;
}

namespace {

struct MomentSums {
  std::vector<double> sum;
  std::vector<double> sum_sq;
};

OdeRunStats finish(const ToyModel& model, std::size_t n_exp, const MomentSums& total) {
  OdeRunStats stats;
  stats.h = model.h;
  stats.n_exp = n_exp;
  const double n = static_cast<double>(n_exp);
  stats.mu.resize(total.sum.size());
  stats.stderr_mu.resize(total.sum.size());
  for (std::size_t k = 0; k < total.sum.size(); ++k) {
    const double mean = total.sum[k] / n;
    stats.mu[k] = mean;
    double var = n > 1 ? (total.sum_sq[k] - n * mean * mean) / (n - 1.0) : 0.0;
    if (var < 0.0) var = 0.0;
    stats.stderr_mu[k] = std::sqrt(var / n);
  }
  return stats;
}

void add_replication(MomentSums& acc, const std::vector<Complex>& ref,
                     const std::vector<Complex>& u, double* row) {
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double e = std::norm(ref[k] - u[k]);
    acc.sum[k] += e;
    acc.sum_sq[k] += e * e;
    if (row) row[k] = e;
  }
}

}  // namespace

OdeRunStats toy_model_experiment(const ToyModel& model, std::size_t n_exp, std::uint64_t seed,
                                 std::vector<double>* squared_errors) {
  if (n_exp < 1) throw std::invalid_argument("toy_model_experiment: n_exp must be >= 1");
  if (!(model.K > 0.0)) throw std::invalid_argument("toy_model_experiment: K must be positive");
  const std::vector<Complex> ref = model.reference();
  const std::size_t width = ref.size();
  if (squared_errors) squared_errors->assign(n_exp * width, 0.0);
  const MomentSums zero{std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)};

  std::atomic<bool> diverged{false};
  const auto partials = blocked_reduce(
      n_exp, zero, [&](std::size_t begin, std::size_t end, MomentSums& acc) {
        try {
          for (std::size_t i = begin; i < end; ++i) {
            Rng rng = derive_stream(seed, {i});
            const auto u = model.replicate(rng);
            add_replication(acc, ref, u,
                            squared_errors ? squared_errors->data() + i * width : nullptr);
          }
        } catch (const DivergenceError&) {
          diverged = true;
        }
      });
  if (diverged) throw DivergenceError("toy model replication diverged");
  MomentSums total = zero;
  for (const auto& p : partials)
    for (std::size_t k = 0; k < width; ++k) {
      total.sum[k] += p.sum[k];
      total.sum_sq[k] += p.sum_sq[k];
    }
  return finish(model, n_exp, total);
}

OdeRunStats toy_model_experiment_serial(const ToyModel& model, std::size_t n_exp,
                                        std::uint64_t seed) {
  if (n_exp < 1) throw std::invalid_argument("toy_model_experiment: n_exp must be >= 1");
  const std::vector<Complex> ref = model.reference();
  const std::size_t width = ref.size();
  MomentSums total{std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)};
  for (std::size_t i = 0; i < n_exp; ++i) {
    Rng rng = derive_stream(seed, {i});
    add_replication(total, ref, model.replicate_generic(rng), nullptr);
  }
  return finish(model, n_exp, total);
}

void write_ode_csv(std::ostream& os, const OdeRunStats& stats) {
  os << "t,mu,stderr_mu\n";
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < stats.mu.size(); ++k)
    os << static_cast<double>(k) * stats.h << ',' << stats.mu[k] << ',' << stats.stderr_mu[k]
       << '\n';
  os.precision(old);
}

}  // namespace inchworm
