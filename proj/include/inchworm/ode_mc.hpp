#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "inchworm/algebra.hpp"
#include "inchworm/errors.hpp"
#include "inchworm/rng.hpp"

namespace inchworm {

using StateVector = std::vector<Complex>;
using Trajectory = std::vector<StateVector>;

// Explicit s-stage Runge-Kutta coefficients. a is stored row-major (s x s)
// and must be strictly lower triangular.
struct ButcherTableau {
  int stages = 0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;

  double coeff(int i, int j) const { return a[static_cast<std::size_t>(i * stages + j)]; }

  // Throws std::invalid_argument on shape mismatch, non-finite entries or a
  // nonzero entry on/above the diagonal.
  void validate() const;

  static ButcherTableau forward_euler();
  static ButcherTableau heun();
  static ButcherTableau classic_rk4();
};

using DeterministicRhs = std::function<StateVector(double t, const StateVector& u)>;

// du/dt = E_X[g(t, u, X)].
template <class Sample>
struct StochasticRhs {
  std::function<Sample(double t, Rng& rng)> sampler;
  std::function<StateVector(double t, const StateVector& u, const Sample& x)> evaluator;
  DeterministicRhs deterministic;  // optional: f(t, u) = E_X[g]
};

Trajectory rk_deterministic_solve(const ButcherTableau& tableau, const DeterministicRhs& f,
                                  const StateVector& u0, double h, int steps);

namespace detail {
void check_finite_state(const StateVector& u, int step);
void axpy(StateVector& y, Complex alpha, const StateVector& x);
}  // namespace detail

// Each stage of each step averages g over its own fresh batch of `ns` samples.
// Samples are drawn in (step, stage, sample) order from `rng`.
template <class Sample>
Trajectory rk_stochastic_solve(const ButcherTableau& tableau, const StochasticRhs<Sample>& rhs,
                               const StateVector& u0, double h, int steps, int ns, Rng& rng) {
  tableau.validate();
  if (!(h > 0.0) || steps < 1 || ns < 1)
    throw std::invalid_argument("rk_stochastic_solve: need h > 0, steps >= 1, ns >= 1");
  const int s = tableau.stages;
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  traj.push_back(u0);
  std::vector<StateVector> k(static_cast<std::size_t>(s));
  for (int n = 0; n < steps; ++n) {
    const StateVector& un = traj.back();
    const double tn = n * h;
    for (int i = 0; i < s; ++i) {
      StateVector arg = un;
      for (int j = 0; j < i; ++j)
        if (tableau.coeff(i, j) != 0.0) detail::axpy(arg, h * tableau.coeff(i, j), k[j]);
      const double ti = tn + tableau.c[i] * h;
      StateVector acc(un.size(), Complex{});
      for (int l = 0; l < ns; ++l) {
        const Sample x = rhs.sampler(ti, rng);
        detail::axpy(acc, 1.0, rhs.evaluator(ti, arg, x));
      }
      for (auto& z : acc) z /= static_cast<double>(ns);
      k[i] = std::move(acc);
    }
    StateVector next = un;
    for (int i = 0; i < s; ++i) detail::axpy(next, h * tableau.b[i], k[i]);
    detail::check_finite_state(next, n + 1);
    traj.push_back(std::move(next));
  }
  return traj;
}

// du/dt = -i A(t, X) u with E_X A = H; estimated directly from the Dyson series.
template <class Sample>
struct DysonProblem {
  std::function<Sample(double t, Rng& rng)> sampler;
  std::function<StateVector(double t, const Sample& x, const StateVector& v)> apply;
};

struct DysonEstimate {
  StateVector mean;
  double variance = 0.0;       // unbiased variance of one sample (sum over components)
  double second_moment = 0.0;  // mean of ||sample||^2
  std::size_t accepted = 0;
  std::size_t rejected = 0;  // samples whose product overflowed

  double rejection_rate() const {
    const auto total = accepted + rejected;
    return total == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(total);
  }
};

// Each sample draws an order M ~ Poisson(rate*T), M sorted uniform times on
// [0, T] and one X per time; the ordered product is divided by the sampling
// density Poisson(M) * M!/T^M, which simplifies to exp(rate*T) / rate^M.
template <class Sample>
DysonEstimate dyson_ode_mc(const DysonProblem<Sample>& problem, const StateVector& u0, double T,
                           double rate, int ns, Rng& rng) {
  if (!(rate > 0.0) || !(T > 0.0) || ns < 1)
    throw std::invalid_argument("dyson_ode_mc: need rate > 0, T > 0, ns >= 1");
  const std::size_t d = u0.size();
  std::poisson_distribution<int> order_dist(rate * T);
  const double envelope = std::exp(rate * T);
  const Complex step_factor = -kI / rate;

  StateVector sum(d, Complex{});
  double sum_sq = 0.0;
  std::vector<StateVector> kept;
  kept.reserve(static_cast<std::size_t>(ns));
  DysonEstimate out;
  std::vector<double> times;
  for (int l = 0; l < ns; ++l) {
    const int order = order_dist(rng);
    times.resize(static_cast<std::size_t>(order));
    for (auto& t : times) t = T * rng.uniform01();
    std::sort(times.begin(), times.end());
    StateVector v = u0;
    bool underflow = false;
    for (int k = 0; k < order; ++k) {
      const Sample x = problem.sampler(times[k], rng);
      if (underflow) continue;  // keep the draw count independent of the values
      v = problem.apply(times[k], x, v);
      double norm2 = 0.0;
      for (auto& z : v) {
        z *= step_factor;
        norm2 += std::norm(z);
      }
      if (std::sqrt(norm2) < 1e-300) {
        underflow = true;
        std::fill(v.begin(), v.end(), Complex{});
      }
    }
    bool finite = true;
    double norm2 = 0.0;
    for (auto& z : v) {
      z *= envelope;
      finite = finite && std::isfinite(z.real()) && std::isfinite(z.imag());
      norm2 += std::norm(z);
    }
    if (!finite || !std::isfinite(norm2)) {
      ++out.rejected;
      continue;
    }
    ++out.accepted;
    for (std::size_t i = 0; i < d; ++i) sum[i] += v[i];
    sum_sq += norm2;
    kept.push_back(std::move(v));
  }
  out.mean.assign(d, Complex{});
  if (out.accepted == 0) return out;
  const double n = static_cast<double>(out.accepted);
  for (std::size_t i = 0; i < d; ++i) out.mean[i] = sum[i] / n;
  out.second_moment = sum_sq / n;
  if (out.accepted > 1) {
    double ss = 0.0;
    for (const auto& v : kept)
      for (std::size_t i = 0; i < d; ++i) ss += std::norm(v[i] - out.mean[i]);
    out.variance = ss / (n - 1.0);
  }
  return out;
}

// Squared-error statistics mu_n = mean_i |u_n - u~_n^(i)|^2 on the step grid.
struct OdeRunStats {
  double h = 0.0;
  std::size_t n_exp = 0;
  std::vector<double> mu;
  std::vector<double> stderr_mu;
};

// du/dt = -(i/2) K u with g(u, X) = -i X u, X ~ U(0, K), u(0) = 1, integrated
// by Heun's method. Replication i draws from derive_stream(seed, {i}).
struct ToyModel {
  double K = 1.0;
  double T = 1.0;
  double h = 0.25;
  int ns = 100;

  int steps() const;
  // Deterministic Heun trajectory u_n (shared reference for all replications).
  std::vector<Complex> reference() const;
  // One stochastic replication through the specialised kernel.
  std::vector<Complex> replicate(Rng& rng) const;
  // Same replication through the generic rk_stochastic_solve path.
  std::vector<Complex> replicate_generic(Rng& rng) const;
};

// Parallel over replications. When `squared_errors` is non-null it receives
// the per-replication |u_n - u~_n|^2 as an n_exp x (steps+1) row-major array.
OdeRunStats toy_model_experiment(const ToyModel& model, std::size_t n_exp, std::uint64_t seed,
                                 std::vector<double>* squared_errors = nullptr);

// Serial reference for toy_model_experiment built on rk_stochastic_solve.
OdeRunStats toy_model_experiment_serial(const ToyModel& model, std::size_t n_exp,
                                        std::uint64_t seed);

// CSV with header "t,mu,stderr_mu", one row per step.
void write_ode_csv(std::ostream& os, const OdeRunStats& stats);

}  // namespace inchworm
