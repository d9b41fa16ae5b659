#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "inchworm/bath.hpp"
#include "inchworm/errors.hpp"

using namespace inchworm;

namespace {

// Brute-force correlation straight from the mode formulas.
Complex brute_B(double tau1, double tau2) {
  const int L = 200;
  const double xi = 0.6, wc = 3.0, wmax = 12.0, beta = 5.0;
  const double f = 1.0 - std::exp(-wmax / wc);
  Complex sum = 0.0;
  for (int l = 1; l <= L; ++l) {
    const double w = -wc * std::log(1.0 - static_cast<double>(l) / L * f);
    const double c = w * std::sqrt(xi * wc / L * f);
    const double d = tau2 - tau1;
    sum += c * c / (2.0 * w) * Complex(std::cos(w * d) / std::tanh(beta * w / 2.0), -std::sin(w * d));
  }
  return sum;
}

}  // namespace

TEST_CASE("mode frequencies and couplings") {
  const BathSpec b = build_bath();
  REQUIRE(b.omega.size() == 200);
  CHECK(b.omega.back() == doctest::Approx(12.0).epsilon(1e-13));
  const double w1 = -3.0 * std::log(1.0 - (1.0 / 200.0) * (1.0 - std::exp(-4.0)));
  CHECK(b.omega.front() == doctest::Approx(w1).epsilon(1e-14));
  for (std::size_t l = 1; l < b.omega.size(); ++l) CHECK(b.omega[l] > b.omega[l - 1]);
  CHECK(b.omega.front() > 0.0);
  for (double c : b.c) CHECK(c > 0.0);

  const BathSpec silent = build_bath(200, 0.0);
  for (double c : silent.c) CHECK(c == 0.0);
}

TEST_CASE("correlation values") {
  const BathSpec b = build_bath();
  const Complex b00 = correlation_B(b, 0.4, 0.4);
  CHECK(b00.imag() == 0.0);
  CHECK(b00.real() == doctest::Approx(brute_B(0.0, 0.0).real()).epsilon(1e-13));

  const Complex b01 = correlation_B(b, 0.0, 1.0);
  const Complex ref = brute_B(0.0, 1.0);
  CHECK(std::abs(b01 - ref) < 1e-12 * std::abs(ref));

  const Complex ab = correlation_B(b, 0.2, 0.9);
  const Complex ba = correlation_B(b, 0.9, 0.2);
  CHECK(ab.real() == doctest::Approx(ba.real()).epsilon(1e-15));
  CHECK(ab.imag() == doctest::Approx(-ba.imag()).epsilon(1e-15));
}

TEST_CASE("correlation is stationary") {
  const BathSpec b = build_bath();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int k = 0; k < 100; ++k) {
    const double t1 = u(gen), t2 = u(gen), shift = u(gen);
    const double lhs = std::abs(correlation_B(b, t1, t2));
    const double rhs = std::abs(correlation_B(b, t1 + shift, t2 + shift));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("tabulated correlation matches direct summation") {
  const BathSpec b = build_bath();
  const BathCorrelation table(b, 4.0);
  const BathCorrelation plain(b);
  CHECK(table.tabulated());
  CHECK_FALSE(plain.tabulated());
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int k = 0; k < 1000; ++k) {
    const double tau = u(gen);
    CHECK(std::abs(table.at_lag(tau) - plain.direct(tau)) <= 1e-12 * plain.peak());
  }
  // Outside the horizon the table falls back to summation.
  CHECK(std::abs(table.at_lag(7.5) - plain.direct(7.5)) <= 1e-14 * plain.peak());
}

TEST_CASE("influence functional orders 1 and 3") {
  const BathCorrelation corr(build_bath());
  const std::array<double, 1> one{0.3};
  CHECK(influence_L(corr, 0.8, one) == corr(0.3, 0.8));
  const std::array<double, 3> three{0.1, 0.4, 0.6};
  const Complex expected = corr(0.1, 0.6) * corr(0.4, 0.9);
  CHECK(std::abs(influence_L(corr, 0.9, three) - expected) < 1e-15);

  const std::array<double, 2> two{0.1, 0.2};
  CHECK_THROWS_AS(influence_L(corr, 0.9, two), UnsupportedOrderError);

  const BathCorrelation silent(build_bath(200, 0.0));
  CHECK(influence_L(silent, 0.9, three) == Complex(0.0));
}

TEST_CASE("influence functional obeys the pairing bound") {
  const BathSpec b = build_bath();
  const double horizon = 4.0;
  const BathCorrelation corr(b, horizon);
  const double lbar = max_correlation(b, horizon);
  CHECK(lbar >= corr.peak() * (1 - 1e-15));
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, horizon);
  for (int k = 0; k < 2000; ++k) {
    std::array<double, 4> s{u(gen), u(gen), u(gen), u(gen)};
    std::sort(s.begin(), s.end());
    CHECK(std::abs(influence_L(corr, s[1], std::span<const double>(s.data(), 1))) <= lbar);
    CHECK(std::abs(influence_L(corr, s[3], std::span<const double>(s.data(), 3))) <=
          3.0 * lbar * lbar);
  }
}

TEST_CASE("influence functional is continuous") {
  const BathCorrelation corr(build_bath());
  std::array<double, 3> s{0.2, 0.5, 0.7};
  const Complex base = influence_L(corr, 1.1, s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto moved = s;
    moved[i] += 1e-9;
    CHECK(std::abs(influence_L(corr, 1.1, moved) - base) < 1e-6);
  }
}

TEST_CASE("bath CSV lists every mode") {
  std::ostringstream os;
  write_bath_csv(os, build_bath(5));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "l,omega_l,c_l");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 5);
}
