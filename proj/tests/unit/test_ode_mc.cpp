#include <doctest.h>

#include <cmath>
#include <sstream>

#include "inchworm/ode_mc.hpp"
#include "inchworm/parallel.hpp"
#include "oracles.hpp"

using namespace inchworm;

namespace {

DeterministicRhs toy_rhs(double K) {
  return [K](double, const StateVector& u) { return StateVector{-0.5 * kI * K * u[0]}; };
}

StochasticRhs<double> toy_stochastic(double K) {
  StochasticRhs<double> rhs;
  rhs.sampler = [K](double, Rng& rng) { return K * rng.uniform01(); };
  rhs.evaluator = [](double, const StateVector& u, const double& x) {
    return StateVector{-kI * x * u[0]};
  };
  rhs.deterministic = toy_rhs(K);
  return rhs;
}

}  // namespace

TEST_CASE("tableaus") {
  CHECK_NOTHROW(ButcherTableau::forward_euler().validate());
  CHECK_NOTHROW(ButcherTableau::heun().validate());
  CHECK_NOTHROW(ButcherTableau::classic_rk4().validate());
  ButcherTableau implicit = ButcherTableau::heun();
  implicit.a[1] = 0.5;  // entry (0, 1), above the diagonal
  CHECK_THROWS_AS(implicit.validate(), std::invalid_argument);
  ButcherTableau bad = ButcherTableau::heun();
  bad.b[0] = NAN;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("one Heun step of the toy equation") {
  const double K = 1.0, h = 0.3;
  const Trajectory tr = rk_deterministic_solve(ButcherTableau::heun(), toy_rhs(K), {1.0}, h, 1);
  const Complex expected = 1.0 - kI * K * h / 2.0 - K * K * h * h / 8.0;
  CHECK(std::abs(tr[1][0] - expected) < 1e-15);
}

TEST_CASE("zero right-hand side keeps the state") {
  const DeterministicRhs zero = [](double, const StateVector& u) {
    return StateVector(u.size(), Complex{});
  };
  const Trajectory tr = rk_deterministic_solve(ButcherTableau::classic_rk4(), zero,
                                               {Complex(1, 2), 3.0}, 0.1, 5);
  for (const auto& u : tr) CHECK(u == StateVector{Complex(1, 2), 3.0});
}

TEST_CASE("Heun converges to the exact solution") {
  const Trajectory tr = rk_deterministic_solve(ButcherTableau::heun(), toy_rhs(3.0), {1.0},
                                               1.0 / 64.0, 64);
  CHECK(std::abs(tr.back()[0] - std::exp(-1.5 * kI)) <= 1e-3);
}

TEST_CASE("Heun nearly preserves the modulus") {
  for (double K : {1.0, 3.0, 10.0}) {
    const double h = 0.25;
    const Trajectory tr = rk_deterministic_solve(ButcherTableau::heun(), toy_rhs(K), {1.0}, h, 40);
    for (std::size_t n = 1; n < tr.size(); ++n)
      CHECK(std::abs(std::abs(tr[n][0]) - std::abs(tr[n - 1][0])) <=
            std::pow(K * h, 4) * std::abs(tr[n - 1][0]));
  }
}

TEST_CASE("non-finite states raise a divergence error") {
  const DeterministicRhs blow = [](double, const StateVector&) { return StateVector{NAN}; };
  CHECK_THROWS_AS(rk_deterministic_solve(ButcherTableau::heun(), blow, {1.0}, 0.1, 3),
                  DivergenceError);
}

TEST_CASE("stochastic step with a degenerate sampler is deterministic") {
  StochasticRhs<double> rhs;
  rhs.sampler = [](double, Rng& rng) { return rng.uniform01(); };
  rhs.evaluator = [](double, const StateVector& u, const double&) {
    return StateVector{-0.5 * kI * u[0]};
  };
  Rng rng(1);
  const Trajectory mc = rk_stochastic_solve(ButcherTableau::heun(), rhs, {1.0}, 0.2, 5, 3, rng);
  const Trajectory det = rk_deterministic_solve(ButcherTableau::heun(), toy_rhs(1.0), {1.0}, 0.2, 5);
  for (std::size_t n = 0; n < det.size(); ++n) CHECK(std::abs(mc[n][0] - det[n][0]) < 1e-15);
}

TEST_CASE("many samples approach the deterministic step") {
  const double K = 1.0, h = 0.25;
  const int ns = 1000000;
  Rng rng(2);
  const Trajectory mc =
      rk_stochastic_solve(ButcherTableau::heun(), toy_stochastic(K), {1.0}, h, 1, ns, rng);
  const Trajectory det = rk_deterministic_solve(ButcherTableau::heun(), toy_rhs(K), {1.0}, h, 1);
  const double stderr_u = std::sqrt(oracle::toy_model_mu(K, h, ns, 1)[1]);
  CHECK(std::abs(mc[1][0] - det[1][0]) <= 5.0 * stderr_u);
}

TEST_CASE("toy experiment matches the closed-form second moment") {
  ToyModel m{1.0, 1.0, 0.25, 4};
  const OdeRunStats s = toy_model_experiment(m, 40000, 3);
  const auto mu = oracle::toy_model_mu(1.0, 0.25, 4, m.steps());
  REQUIRE(s.mu.size() == mu.size());
  CHECK(s.mu[0] == 0.0);
  for (std::size_t n = 1; n < mu.size(); ++n) {
    CHECK(s.mu[n] >= 0.0);
    CHECK(std::abs(s.mu[n] - mu[n]) <= 5.0 * s.stderr_mu[n]);
  }
}

TEST_CASE("closed-form second moment against published values") {
  // e(1) at K = 1 from the published order table.
  CHECK(oracle::toy_model_mu(1.0, 0.25, 100, 4)[4] == doctest::Approx(1.0593e-4).epsilon(0.3));
  CHECK(oracle::toy_model_mu(1.0, 0.25, 3200, 4)[4] == doctest::Approx(3.3060e-6).epsilon(0.3));
  CHECK(oracle::toy_model_mu(1.0, 1.0 / 64, 100, 64)[64] ==
        doctest::Approx(6.5124e-6).epsilon(0.3));
}

TEST_CASE("toy experiment at a published setting") {
  ToyModel m{1.0, 1.0, 0.25, 100};
  const OdeRunStats s = toy_model_experiment(m, 100 * 4 * 100, 0);
  CHECK(s.mu.back() <= 1.3 * 1.0593e-4);
  CHECK(s.mu.back() >= 1.0593e-4 / 1.3);
}

TEST_CASE("fast and generic toy kernels agree") {
  ToyModel m{2.0, 1.0, 0.125, 7};
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng a = derive_stream(5, {i});
    Rng b = derive_stream(5, {i});
    const auto u = m.replicate(a);
    const auto v = m.replicate_generic(b);
    REQUIRE(u.size() == v.size());
    for (std::size_t n = 0; n < u.size(); ++n) CHECK(std::abs(u[n] - v[n]) <= 1e-14);
    CHECK(a.draws() == b.draws());
  }
  const OdeRunStats p = toy_model_experiment(m, 600, 9);
  const OdeRunStats q = toy_model_experiment_serial(m, 600, 9);
  for (std::size_t n = 0; n < p.mu.size(); ++n)
    CHECK(p.mu[n] == doctest::Approx(q.mu[n]).epsilon(1e-10));
}

TEST_CASE("toy experiment is reproducible across worker counts") {
  ToyModel m{1.0, 1.0, 0.25, 10};
  set_worker_count(1);
  const OdeRunStats a = toy_model_experiment(m, 1000, 4);
  set_worker_count(4);
  const OdeRunStats b = toy_model_experiment(m, 1000, 4);
  set_worker_count(1);
  CHECK(a.mu == b.mu);
  CHECK(a.stderr_mu == b.stderr_mu);
}

TEST_CASE("error growth regimes of the toy model") {
  // K = 10, h = 1/4: |1 - iKh/2 - K^2h^2/8| > 1, so the error grows exponentially.
  const auto fast = oracle::toy_model_mu(10.0, 0.25, 10, 12);
  for (std::size_t n = 2; n < fast.size(); ++n) CHECK(fast[n] / fast[n - 1] > 1.05);
  ToyModel m{10.0, 3.0, 0.25, 10};
  const OdeRunStats s = toy_model_experiment(m, 4000, 6);
  for (std::size_t n = 1; n < s.mu.size(); ++n)
    CHECK(std::abs(s.mu[n] - fast[n]) <= 5.0 * s.stderr_mu[n]);
}

TEST_CASE("Dyson sampler") {
  SUBCASE("zero generator returns the initial state") {
    DysonProblem<double> p;
    p.sampler = [](double, Rng& rng) { return rng.uniform01(); };
    p.apply = [](double, const double&, const StateVector& v) {
      return StateVector(v.size(), Complex{});
    };
    Rng rng(1);
    const DysonEstimate e = dyson_ode_mc(p, {Complex(0.5, 0.5)}, 1.0, 1.0, 2000, rng);
    // Samples with M > 0 are exactly zero; the M = 0 samples carry exp(rate T).
    CHECK(std::abs(e.mean[0] - Complex(0.5, 0.5)) <= 5.0 * std::sqrt(e.variance / 2000.0));
  }
  SUBCASE("scalar generator is unbiased") {
    DysonProblem<double> p;
    p.sampler = [](double, Rng& rng) { return rng.uniform01(); };
    p.apply = [](double, const double& x, const StateVector& v) { return StateVector{x * v[0]}; };
    Rng rng(2);
    const int ns = 200000;
    const double T = 0.5;
    const DysonEstimate e = dyson_ode_mc(p, {1.0}, T, 1.0, ns, rng);
    CHECK(e.rejected == 0);
    CHECK(std::abs(e.mean[0] - std::exp(-kI * T / 2.0)) <= 5.0 * std::sqrt(e.variance / ns));
  }
  SUBCASE("second moment grows with the horizon") {
    DysonProblem<double> p;
    p.sampler = [](double, Rng& rng) { return rng.uniform01(); };
    p.apply = [](double, const double& x, const StateVector& v) { return StateVector{x * v[0]}; };
    double prev = 0.0;
    for (double T : {1.0, 2.0, 3.0}) {
      Rng rng(3);
      const DysonEstimate e = dyson_ode_mc(p, {1.0}, T, 1.0, 50000, rng);
      CHECK(e.second_moment > prev);
      prev = e.second_moment;
    }
  }
}

TEST_CASE("ODE CSV") {
  ToyModel m{1.0, 0.5, 0.25, 2};
  std::ostringstream os;
  write_ode_csv(os, toy_model_experiment(m, 10, 1));
  CHECK(os.str().rfind("t,mu,stderr_mu\n0,0,0\n", 0) == 0);
}
