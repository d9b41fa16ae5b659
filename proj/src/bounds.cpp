#include "inchworm/bounds.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace inchworm {

void BoundConstants::validate() const {
  if (!(W > 0.0) || !(G > 0.0) || !(Lbar > 0.0) || !(H > 0.0) || !(Gpp > 0.0) || !(Gppp > 0.0) ||
      !(theta1 > 0.0) || !(theta2 > 0.0))
    throw std::invalid_argument("BoundConstants: all constants must be positive");
  if (mbar < 1 || mbar % 2 == 0) throw std::invalid_argument("BoundConstants: mbar must be odd");
}

double double_factorial(int n) {
  double f = 1.0;
  for (int k = n; k > 1; k -= 2) f *= k;
  return f;
}

double P1(const BoundConstants& k, double t) {
  const double sl = std::sqrt(k.Lbar);
  const double x = 2.0 * k.W * k.G * sl * t;
  double sum = 0.0;
  for (int m = 3; m <= k.mbar; m += 2)
    sum += (m - 1.0) * m / double_factorial(m - 3) * std::pow(x, m - 2);
  return 2.0 * k.W * k.W * k.G * k.Lbar +
         3.0 * std::pow(k.W, 3) * k.G * k.G * std::pow(k.Lbar, 1.5) * (1.0 + t) * sum;
}

double gamma_bar(const BoundConstants& k, double t) {
  const double a = k.W * k.G * std::sqrt(k.Lbar);
  double sum = 0.0;
  for (int m = 1; m <= k.mbar; m += 2) sum += std::pow(a * t, m) / double_factorial(m - 1);
  return 2.0 * a * sum;
}

double gamma_bar_limit(const BoundConstants& k, double t) {
  const double a2 = k.W * k.W * k.G * k.G * k.Lbar;
  return 2.0 * a2 * t * std::exp(0.5 * a2 * t * t);
}

double P_e(const BoundConstants& k, double t) {
  const double sl = std::sqrt(k.Lbar);
  const double x = 2.0 * k.W * k.G * sl * t;
  double sum = 0.0;
  for (int m = 1; m <= k.mbar; m += 2) sum += (m + 1.0) / double_factorial(m - 1) * std::pow(x, m);
  return (0.25 * k.H + 8.0 * P1(k, t)) * k.Gpp + 5.0 / 12.0 * k.Gppp + k.W * k.Gpp * sl * sum;
}

double log_error_envelope_mc(const BoundConstants& k, double t, double h, double ns) {
  const double g = gamma_bar(k, t);
  if (g <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(k.theta2) + 0.5 * std::log(g) + k.theta1 * std::sqrt(P1(k, t)) * t +
         0.5 * std::log(h / ns);
}

double error_envelope_mc(const BoundConstants& k, double t, double h, double ns) {
  return std::exp(log_error_envelope_mc(k, t, h, ns));
}

double log_error_envelope_full(const BoundConstants& k, double t, double h, double ns) {
  const double a = std::log(P_e(k, t)) + k.theta1 * std::sqrt(P1(k, t)) * t + 2.0 * std::log(h);
  const double b = log_error_envelope_mc(k, t, h, ns);
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double error_envelope_full(const BoundConstants& k, double t, double h, double ns) {
  return std::exp(log_error_envelope_full(k, t, h, ns));
}

double bias_envelope(const BoundConstants& k, const std::function<double(double)>& p2, double t,
                     double h, double ns) {
  if (!p2) throw std::invalid_argument("bias_envelope: P2 has no closed form; supply it");
  const double alpha = 16.0 * p2(t) * (10.0 * t + 16.0 * t * t + 5.0 * t * t * t + 0.25 * t * t * t * t);
  return 4.0 * k.theta2 * k.theta2 * alpha * gamma_bar(k, t) *
         std::exp(3.0 * k.theta1 * std::sqrt(P1(k, t)) * t) * h / ns;
}

double ode_dyson_variance_bound(int d, double mprime, double T, double u0_norm) {
  return std::expm1(d * mprime * mprime * T) * u0_norm * u0_norm;
}

double spinboson_dyson_variance_bound(double w_norm, double lbar, double dt) {
  const double w2 = w_norm * w_norm;
  return std::exp(0.5 * w2 * w2 * lbar * lbar * dt * dt);
}

}  // namespace inchworm
