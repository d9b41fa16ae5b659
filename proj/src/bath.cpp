#include "inchworm/bath.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "inchworm/errors.hpp"

namespace inchworm {

BathSpec build_bath(int modes, double xi, double omega_c, double omega_max, double beta) {
  if (modes < 1) throw std::invalid_argument("build_bath: need at least one mode");
  if (!(omega_c > 0.0) || !(omega_max > 0.0) || !(beta > 0.0) || !(xi >= 0.0))
    throw std::invalid_argument("build_bath: omega_c, omega_max, beta must be positive, xi >= 0");
  BathSpec spec{modes, xi, omega_c, omega_max, beta, {}, {}};
  const double span = -std::expm1(-omega_max / omega_c);  // 1 - exp(-omega_max/omega_c)
  const double coupling = std::sqrt(xi * omega_c / modes * span);
  spec.omega.resize(static_cast<std::size_t>(modes));
  spec.c.resize(static_cast<std::size_t>(modes));
  for (int l = 1; l <= modes; ++l) {
    const double w = -omega_c * std::log1p(-static_cast<double>(l) / modes * span);
    spec.omega[l - 1] = w;
    spec.c[l - 1] = w * coupling;
  }
  return spec;
}

namespace {

// coth(x) = 1 + 2/(e^{2x} - 1), written so that large x cannot overflow.
double coth(double x) { return 1.0 + 2.0 / std::expm1(2.0 * x); }

}  // namespace

Complex correlation_B(const BathSpec& spec, double tau1, double tau2) {
  const double tau = tau2 - tau1;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t l = 0; l < spec.omega.size(); ++l) {
    const double w = spec.omega[l];
    const double a = spec.c[l] * spec.c[l] / (2.0 * w);
    re += a * coth(0.5 * spec.beta * w) * std::cos(w * tau);
    im -= a * std::sin(w * tau);
  }
  return {re, im};
}

double max_correlation(const BathSpec& spec, double horizon, int samples) {
  double m = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double tau = samples > 1 ? horizon * k / (samples - 1) : 0.0;
    m = std::max(m, std::abs(correlation_B(spec, 0.0, tau)));
  }
  return m;
}

BathCorrelation::BathCorrelation(const BathSpec& spec) : spec_(spec) {
  weight_.reserve(spec.omega.size());
  coth_.reserve(spec.omega.size());
  for (std::size_t l = 0; l < spec.omega.size(); ++l) {
    const double w = spec.omega[l];
    weight_.push_back(spec.c[l] * spec.c[l] / (2.0 * w));
    coth_.push_back(coth(0.5 * spec.beta * w));
  }
  silent_ = std::all_of(weight_.begin(), weight_.end(), [](double a) { return a == 0.0; });
}

BathCorrelation::BathCorrelation(const BathSpec& spec, double horizon, double rel_tol)
    : BathCorrelation(spec) {
  if (!(horizon > 0.0) || !(rel_tol > 0.0))
    throw std::invalid_argument("BathCorrelation: horizon and tolerance must be positive");
  const double peak_value = peak();
  if (peak_value == 0.0) return;  // xi = 0: nothing to tabulate
  // Cubic Hermite error <= max|B''''| spacing^4 / 384.
  double fourth = 0.0;
  for (std::size_t l = 0; l < weight_.size(); ++l) {
    const double w2 = spec_.omega[l] * spec_.omega[l];
    fourth += weight_[l] * w2 * w2 * (coth_[l] + 1.0);
  }
  spacing_ = std::pow(384.0 * rel_tol * peak_value / fourth, 0.25);
  const auto nodes = static_cast<std::size_t>(std::ceil(horizon / spacing_)) + 2;
  horizon_ = static_cast<double>(nodes - 2) * spacing_;
  table_.resize(2 * nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double tau = static_cast<double>(k) * spacing_;
    table_[2 * k] = direct(tau);
    table_[2 * k + 1] = derivative(tau);
  }
}

Complex BathCorrelation::direct(double tau) const {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t l = 0; l < weight_.size(); ++l) {
    const double arg = spec_.omega[l] * tau;
    re += weight_[l] * coth_[l] * std::cos(arg);
    im -= weight_[l] * std::sin(arg);
  }
  return {re, im};
}

Complex BathCorrelation::derivative(double tau) const {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t l = 0; l < weight_.size(); ++l) {
    const double w = spec_.omega[l];
    const double arg = w * tau;
    re -= weight_[l] * coth_[l] * w * std::sin(arg);
    im -= weight_[l] * w * std::cos(arg);
  }
  return {re, im};
}

double BathCorrelation::peak() const {
  double s = 0.0;
  for (std::size_t l = 0; l < weight_.size(); ++l) s += weight_[l] * coth_[l];
  return s;
}

Complex BathCorrelation::at_lag(double tau) const {
  if (silent_) return {};
  const double a = std::abs(tau);
  if (table_.empty() || a > horizon_) return direct(tau);
  // B(-tau) = conj(B(tau)).
  const double u = a / spacing_;
  const auto k = static_cast<std::size_t>(u);
  const double f = u - static_cast<double>(k);
  const Complex& y0 = table_[2 * k];
  const Complex& d0 = table_[2 * k + 1];
  const Complex& y1 = table_[2 * k + 2];
  const Complex& d1 = table_[2 * k + 3];
  const double f2 = f * f;
  const double f3 = f2 * f;
  const double h00 = 2.0 * f3 - 3.0 * f2 + 1.0;
  const double h10 = f3 - 2.0 * f2 + f;
  const double h01 = -2.0 * f3 + 3.0 * f2;
  const double h11 = f3 - f2;
  const Complex v = h00 * y0 + h01 * y1 + spacing_ * (h10 * d0 + h11 * d1);
  return tau >= 0.0 ? v : std::conj(v);
}

Complex influence_L(const BathCorrelation& corr, double s_up, std::span<const double> points) {
  switch (points.size()) {
    case 1:
      return corr(points[0], s_up);
    case 3:
      return corr(points[0], points[2]) * corr(points[1], s_up);
    default:
      throw UnsupportedOrderError("influence_L: diagram order " + std::to_string(points.size()) +
                                  " is not supported (only 1 and 3)");
  }
}

void write_bath_csv(std::ostream& os, const BathSpec& spec) {
  os << "l,omega_l,c_l\n";
  const auto old = os.precision(17);
  for (std::size_t l = 0; l < spec.omega.size(); ++l)
    os << l + 1 << ',' << spec.omega[l] << ',' << spec.c[l] << '\n';
  os.precision(old);
}

}  // namespace inchworm
