#include "inchworm/algebra.hpp"

namespace inchworm {

ComplexMat2 mat_exp(const ComplexMat2& a) {
  const Complex mu = 0.5 * trace(a);
  const ComplexMat2 b = a - ComplexMat2::diag(mu, mu);
  // b is traceless, so b*b = -det(b) * I.
  const Complex q2 = -det(b);
  const Complex q = std::sqrt(q2);

  Complex cosh_q;
  Complex sinhc_q;  // sinh(q) / q
  if (2.0 * std::abs(q) < 1e-8) {
    cosh_q = 1.0 + q2 / 2.0 + q2 * q2 / 24.0;
    sinhc_q = 1.0 + q2 / 6.0 + q2 * q2 / 120.0;
  } else {
    cosh_q = std::cosh(q);
    sinhc_q = std::sinh(q) / q;
  }
  const Complex scale = std::exp(mu);
  return scale * (ComplexMat2::diag(cosh_q, cosh_q) + sinhc_q * b);
}

}  // namespace inchworm
