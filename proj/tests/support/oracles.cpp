#include "oracles.hpp"

#include <cmath>

namespace oracle {

using inchworm::kI;
using inchworm::MeshPoint;
using inchworm::Side;

ComplexMat2 free_propagator(const ComplexMat2& H, const ComplexMat2& O, double t, MeshPoint up,
                            MeshPoint lo, double h) {
  const double s_up = up.x * h;
  const double s_lo = lo.x * h;
  const bool up_before = s_up < t || (s_up == t && up.side == Side::Before);
  const bool lo_after = s_lo > t || (s_lo == t && lo.side == Side::After);
  if (up_before) return exp_series(-kI * (s_up - s_lo) * H, 60);
  if (lo_after) return exp_series(kI * (s_up - s_lo) * H, 60);
  return exp_series(kI * (s_up - t) * H, 60) * O * exp_series(-kI * (t - s_lo) * H, 60);
}

inchworm::PropagatorGrid free_grid(const inchworm::Mesh& mesh, const ComplexMat2& H,
                                   const ComplexMat2& O) {
  inchworm::PropagatorGrid grid(mesh, O);
  for (int r = 0; r < mesh.label_count(); ++r)
    for (int c = 0; c < r; ++c)
      grid.set({r}, {c}, free_propagator(H, O, mesh.t(), mesh.point({r}), mesh.point({c}), mesh.h()));
  return grid;
}

std::vector<double> toy_model_mu(double K, double h, int ns, int steps) {
  // One Heun step multiplies u by 1 - i h (X1 + X2)/2 - h^2 X1 X2 / 2 with
  // independent stage means X1, X2 (mean K/2, variance K^2/(12 ns)).
  const double m = 0.5 * K;
  const double ex2 = K * K / (12.0 * ns) + m * m;
  const double rho = 1.0 - h * h * m * m + 0.25 * std::pow(h, 4) * ex2 * ex2 +
                     0.25 * h * h * (2.0 * ex2 + 2.0 * m * m);
  const double a = std::pow(1.0 - 0.5 * h * h * m * m, 2) + h * h * m * m;
  std::vector<double> mu(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) mu[n] = std::pow(rho, n) - std::pow(a, n);
  return mu;
}

ComplexMat2 exp_series(const ComplexMat2& a, int terms) {
  ComplexMat2 sum = ComplexMat2::identity();
  ComplexMat2 term = ComplexMat2::identity();
  for (int k = 1; k < terms; ++k) {
    term = term * a * (1.0 / k);
    sum += term;
  }
  return sum;
}

}  // namespace oracle
