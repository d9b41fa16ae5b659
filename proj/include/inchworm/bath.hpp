#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "inchworm/algebra.hpp"

namespace inchworm {

// Harmonic bath with an Ohmic spectral density discretised into L modes.
struct BathSpec {
  int modes = 200;
  double xi = 0.6;         // Kondo parameter
  double omega_c = 3.0;    // primary frequency
  double omega_max = 12.0; // cutoff
  double beta = 5.0;       // inverse temperature

  std::vector<double> omega;  // omega_l, strictly increasing in (0, omega_max]
  std::vector<double> c;      // couplings c_l
};

// omega_l = -omega_c ln(1 - (l/L)(1 - exp(-omega_max/omega_c)))
// c_l     = omega_l sqrt(xi omega_c / L (1 - exp(-omega_max/omega_c)))
BathSpec build_bath(int modes = 200, double xi = 0.6, double omega_c = 3.0,
                    double omega_max = 12.0, double beta = 5.0);

// B(tau1, tau2) = sum_l c_l^2/(2 omega_l) [coth(beta omega_l/2) cos(omega_l (tau2 - tau1))
//                                           - i sin(omega_l (tau2 - tau1))]
// by direct summation over the modes.
Complex correlation_B(const BathSpec& spec, double tau1, double tau2);

// max |B(0, tau)| over tau in [0, horizon], sampled on a fine uniform grid.
double max_correlation(const BathSpec& spec, double horizon, int samples = 4001);

// B is stationary, so it is a function of tau = tau2 - tau1 alone. This
// evaluator precomputes the per-mode weights and, optionally, a cubic Hermite
// table of B and dB/dtau over |tau| <= horizon whose interpolation error is
// below `rel_tol * |B(0)|`.
class BathCorrelation {
 public:
  explicit BathCorrelation(const BathSpec& spec);
  BathCorrelation(const BathSpec& spec, double horizon, double rel_tol = 1e-13);

  const BathSpec& spec() const { return spec_; }
  bool tabulated() const { return !table_.empty(); }
  double table_spacing() const { return spacing_; }

  Complex operator()(double tau1, double tau2) const { return at_lag(tau2 - tau1); }
  Complex at_lag(double tau) const;
  Complex direct(double tau) const;

  // |B(0, 0)|, the largest magnitude B attains.
  double peak() const;

 private:
  Complex derivative(double tau) const;

  BathSpec spec_;
  std::vector<double> weight_;  // c_l^2 / (2 omega_l)
  std::vector<double> coth_;    // coth(beta omega_l / 2)
  bool silent_ = false;  // every coupling is zero
  double horizon_ = 0.0;
  double spacing_ = 0.0;
  std::vector<Complex> table_;  // interleaved B, dB/dtau at tau = k * spacing
};

// Bath influence functional for diagram orders 1 and 3. The points s_1 < ...
// < s_M are followed by s_up:
//   M = 1: B(s_1, s_up)
//   M = 3: B(s_1, s_3) B(s_2, s_up)
// Other orders throw UnsupportedOrderError; the general pairing sum is not
// implemented.
Complex influence_L(const BathCorrelation& corr, double s_up, std::span<const double> points);

// CSV "l,omega_l,c_l".
void write_bath_csv(std::ostream& os, const BathSpec& spec);

}  // namespace inchworm
