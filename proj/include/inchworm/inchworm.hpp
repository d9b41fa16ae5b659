#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "inchworm/algebra.hpp"
#include "inchworm/bath.hpp"
#include "inchworm/mesh.hpp"
#include "inchworm/rng.hpp"

namespace inchworm {

// Two-level system coupled to the bath through W.
struct SystemSpec {
  ComplexMat2 H;    // system Hamiltonian (Hermitian)
  ComplexMat2 W;    // system part of the coupling
  ComplexMat2 O;    // observable inserted at time t
  ComplexMat2 rho;  // initial density matrix

  // H = epsilon sigma_z + delta sigma_x, W = O = sigma_z, rho = diag(0, 1).
  static SystemSpec spin_boson(double epsilon = 1.0, double delta = 1.0);

  // Throws std::invalid_argument unless H is Hermitian to 1e-14.
  void validate() const;
};

enum class SolveMode { Deterministic, MonteCarlo };

// Time argument handed to the bath correlation B for a contour point s in
// [0, 2t]. Physical folds the contour at t (s -> t - |s - t|), so the branch
// after t runs backwards in real time; Contour passes s through unchanged.
enum class BathTime { Physical, Contour };

struct SchemeConfig {
  int N = 8;         // steps from 0 to t
  double t = 1.0;    // observation time; the mesh covers [0, 2t]
  int ns = 1;        // samples per slope evaluation
  int mbar = 1;      // truncation order (odd, 1 or 3)
  std::uint64_t seed = 0;
  SolveMode mode = SolveMode::MonteCarlo;
  double divergence_guard = 10.0 * std::sqrt(2.0);
  BathTime bath_time = BathTime::Physical;

  double h() const { return t / N; }
  // Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

struct StepSlopes {
  ComplexMat2 K1;
  ComplexMat2 K2;
};

// Random stream for one slope evaluation of one replication.
inline Rng slope_stream(std::uint64_t seed, std::uint64_t replication, GridNode row, GridNode col,
                        int stage) {
  return derive_stream(seed, {replication, static_cast<std::uint64_t>(row.label),
                              static_cast<std::uint64_t>(col.label),
                              static_cast<std::uint64_t>(stage)});
}

class InchwormSolver {
 public:
  InchwormSolver(SystemSpec system, const BathCorrelation& bath, SchemeConfig config);

  const SystemSpec& system() const { return system_; }
  const SchemeConfig& config() const { return config_; }
  const Mesh& mesh() const { return mesh_; }

  /// Order-one slope by quadrature: the integral over s in (t_col, t_up) of
  ///   sgn(t_up - t) i^2 (-1)^{[s <= t]} W I_h G(t_up, s) W I_h G(s, t_col) B(s, t_up)
  /// with 8-point Gauss-Legendre on every mesh cell and B taken at the
  /// configured bath times. Requires mbar == 1.
  ComplexMat2 slope_quadrature(const PropagatorGrid& grid, GridNode up, GridNode col,
                               const Override* starred = nullptr) const;

  /// One Monte Carlo sample of the slope: for each odd M <= mbar, M sorted
  /// uniform times on (t_col, t_up) weighted by the simplex volume
  /// (t_up - t_col)^M / M!.
  ComplexMat2 slope_sample(const PropagatorGrid& grid, GridNode up, GridNode col, Rng& rng,
                           const Override* starred = nullptr) const;

  // Mean of `ns` slope samples, summed in sample order.
  ComplexMat2 slope_mc(const PropagatorGrid& grid, GridNode up, GridNode col, int ns, Rng& rng,
                       const Override* starred = nullptr) const;

  /// Heun-type update of one Step entry (row, col) from (row-1, col):
  ///   G*  = (I + s_n i H h) G_n + h K1
  ///   G   = (I + s_n i H h / 2) G_n + s_{n+1} i H h G* / 2 + h (K1 + K2) / 2
  /// with K1 taken up to the previous row and K2 up to `row` using G* at
  /// (row, col). Writes the result to the grid and returns the slopes.
  /// Throws DivergenceError when the result is non-finite or its norm exceeds
  /// the configured guard.
  StepSlopes step(PropagatorGrid& grid, GridNode row, GridNode col,
                  std::uint64_t replication = 0) const;

  // Full grid, filled level by level along anti-diagonals; the Step entries
  // of a level are computed in parallel.
  PropagatorGrid solve(std::uint64_t replication = 0) const;

  // Full grid, filled serially column by column. Produces the same values as
  // solve() bit for bit.
  PropagatorGrid solve_serial(std::uint64_t replication = 0) const;

  PropagatorGrid empty_grid() const { return PropagatorGrid(mesh_, system_.O); }

 private:
  ComplexMat2 march_matrix(int sign, double fraction) const;
  double bath_time(double s) const {
    return config_.bath_time == BathTime::Physical ? config_.t - std::abs(s - config_.t) : s;
  }

  SystemSpec system_;
  const BathCorrelation& bath_;
  SchemeConfig config_;
  Mesh mesh_;
};

// Entry (1,1) of G(N+j, N-j); j = 0 gives O_s(1,1).
Complex observable_trace(const PropagatorGrid& grid, int j);

// Propagator G(N+j, N-j) for j = 0..N.
ComplexMat2 observable_propagator(const PropagatorGrid& grid, int j);

// CSV "j,t_j,re_sigma_z,im_sigma_z".
void write_observable_csv(std::ostream& os, const PropagatorGrid& grid);

}  // namespace inchworm
