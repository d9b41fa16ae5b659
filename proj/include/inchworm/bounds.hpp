#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace inchworm {

// Constants entering the inchworm error envelopes.
struct BoundConstants {
  double W = 1.0;      // bound on ||W_s||
  double G = 1.0;      // bound on propagator norms
  double Lbar = 1.0;   // bound on |B|
  double H = 1.0;      // bound on ||H_s||
  double Gpp = 1.0;    // bound on second derivatives of G
  double Gppp = 1.0;   // bound on third derivatives of G
  int mbar = 1;
  double theta1 = 353.0;
  double theta2 = std::sqrt(34.0);

  // Throws std::invalid_argument unless every constant is positive and mbar is odd.
  void validate() const;
};

// n!! with 0!! = (-1)!! = 1.
double double_factorial(int n);

// 2 W^2 G L + 3 W^3 G^2 L^{3/2} (1 + t) sum_{M=3, odd}^{mbar} (M-1) M / (M-3)!! (2 W G L^{1/2} t)^{M-2}
double P1(const BoundConstants& k, double t);

// 2 W G L^{1/2} sum_{M odd <= mbar} (W G L^{1/2} t)^M / (M-1)!!
double gamma_bar(const BoundConstants& k, double t);

// Limit of gamma_bar as mbar grows: 2 W^2 G^2 L t exp(W^2 G^2 L t^2 / 2).
double gamma_bar_limit(const BoundConstants& k, double t);

// (H/4 + 8 P1) G'' + 5/12 G''' + W G'' L^{1/2} sum_{M odd <= mbar} (M+1)/(M-1)!! (2 W G L^{1/2} t)^M
double P_e(const BoundConstants& k, double t);

// Root-mean-square Monte Carlo error envelope
//   theta2 sqrt(gamma_bar(t)) exp(theta1 sqrt(P1(t)) t) sqrt(h / Ns).
// Overflows to +inf quickly; log_error_envelope_mc stays finite.
double error_envelope_mc(const BoundConstants& k, double t, double h, double ns);
double log_error_envelope_mc(const BoundConstants& k, double t, double h, double ns);

// P_e(t) exp(theta1 sqrt(P1) t) h^2 + error_envelope_mc.
double error_envelope_full(const BoundConstants& k, double t, double h, double ns);
double log_error_envelope_full(const BoundConstants& k, double t, double h, double ns);

// Bias envelope 4 theta2^2 alpha_bar(t) gamma_bar(t) exp(3 theta1 sqrt(P1) t) h / Ns with
// alpha_bar(t) = 16 P2(t) (10t + 16t^2 + 5t^3 + t^4/4). P2 has no closed form and
// must be supplied by the caller; an empty p2 throws std::invalid_argument.
double bias_envelope(const BoundConstants& k, const std::function<double(double)>& p2, double t,
                     double h, double ns);

// [exp(d M'^2 T) - 1] ||u0||^2 for the direct Dyson-series sampler of an ODE.
double ode_dyson_variance_bound(int d, double mprime, double T, double u0_norm);

// exp(||W||^4 L^2 dt^2 / 2) for the Dyson series of the spin-boson propagator.
double spinboson_dyson_variance_bound(double w_norm, double lbar, double dt);

}  // namespace inchworm
