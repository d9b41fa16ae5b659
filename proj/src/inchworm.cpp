#include "inchworm/inchworm.hpp"

#include <algorithm>
#include <array>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <string>

#include "inchworm/errors.hpp"

namespace inchworm {

SystemSpec SystemSpec::spin_boson(double epsilon, double delta) {
  return {epsilon * pauli_z() + delta * pauli_x(), pauli_z(), pauli_z(),
          ComplexMat2::diag(0.0, 1.0)};
}

void SystemSpec::validate() const {
  const ComplexMat2 d = H - adjoint(H);
  if (frobenius_norm(d) > 1e-14 * std::max(1.0, frobenius_norm(H)))
    throw std::invalid_argument("SystemSpec: H is not Hermitian");
  if (!is_finite(H) || !is_finite(W) || !is_finite(O) || !is_finite(rho))
    throw std::invalid_argument("SystemSpec: non-finite matrix entry");
}

void SchemeConfig::validate() const {
  if (N < 1) throw std::invalid_argument("SchemeConfig: N must be >= 1");
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("SchemeConfig: t must be > 0");
  if (h() > 1.0) throw std::invalid_argument("SchemeConfig: step h = t/N must not exceed 1");
  if (ns < 1) throw std::invalid_argument("SchemeConfig: ns must be >= 1");
  if (mbar != 1 && mbar != 3)
    throw UnsupportedOrderError("SchemeConfig: mbar must be 1 or 3, got " + std::to_string(mbar));
  if (mode == SolveMode::Deterministic && mbar != 1)
    throw UnsupportedOrderError("SchemeConfig: deterministic slopes are available for mbar = 1 only");
  if (!(divergence_guard > 0.0)) throw std::invalid_argument("SchemeConfig: guard must be > 0");
}

InchwormSolver::InchwormSolver(SystemSpec system, const BathCorrelation& bath, SchemeConfig config)
    : system_(system), bath_(bath), config_(config), mesh_((config.validate(), config.N), config.t) {
  system_.validate();
}

namespace {

constexpr int kMaxOrder = 3;

// 8-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 8> kGaussNode = {
    0.019855071751231856, 0.10166676129318664, 0.2372337950418355, 0.4082826787521751,
    0.5917173212478249,   0.7627662049581645,  0.8983332387068134, 0.9801449282487681};
constexpr std::array<double, 8> kGaussWeight = {
    0.050614268145188129, 0.11119051722668724, 0.15685332293894364, 0.18134189168918099,
    0.18134189168918099,  0.15685332293894364, 0.11119051722668724, 0.050614268145188129};

// i^{M+1} for odd M.
double odd_phase(int m) { return ((m + 1) / 2) % 2 == 0 ? 1.0 : -1.0; }

double factorial(int m) {
  double f = 1.0;
  for (int k = 2; k <= m; ++k) f *= k;
  return f;
}

// A sampled time sitting exactly on t takes the side of the interval's lower
// end, so an interval starting at N+ never asks for an N- value.
MeshPoint sample_point(double x, int n, MeshPoint lo) {
  const double nd = static_cast<double>(n);
  if (x < nd) return {x, Side::Before};
  if (x > nd) return {x, Side::After};
  return {x, lo.x == nd ? lo.side : Side::Before};
}

}  // namespace

ComplexMat2 InchwormSolver::march_matrix(int sign, double fraction) const {
  return ComplexMat2::identity() + (fraction * sign * config_.h()) * (kI * system_.H);
}

ComplexMat2 InchwormSolver::slope_quadrature(const PropagatorGrid& grid, GridNode up, GridNode col,
                                             const Override* starred) const {
  if (config_.mbar != 1)
    throw UnsupportedOrderError("slope_quadrature: only mbar = 1 is available");
  const int n = mesh_.steps();
  const double h = config_.h();
  const MeshPoint p_up = mesh_.point(up);
  const MeshPoint p_lo = mesh_.point(col);
  const int first = mesh_.time_index(col);
  const int last = mesh_.time_index(up);
  const double t_up = bath_time(mesh_.time(up));
  const double sgn = mesh_.sign(up);
  const ComplexMat2& W = system_.W;

  ComplexMat2 sum;
  for (int cell = first; cell < last; ++cell) {
    for (std::size_t g = 0; g < kGaussNode.size(); ++g) {
      const double x = cell + kGaussNode[g];
      const MeshPoint p{x, x < n ? Side::Before : Side::After};
      const double parity = x <= n ? -1.0 : 1.0;
      const Complex l = bath_(bath_time(x * h), t_up);
      const ComplexMat2 term =
          W * interpolate(grid, p_up, p, starred) * W * interpolate(grid, p, p_lo, starred);
      sum += (kGaussWeight[g] * parity * l) * term;
    }
  }
  // sgn * i^2 * h (cell width in time units)
  return (-sgn * h) * sum;
}

ComplexMat2 InchwormSolver::slope_sample(const PropagatorGrid& grid, GridNode up, GridNode col,
                                         Rng& rng, const Override* starred) const {
  const int n = mesh_.steps();
  const double h = config_.h();
  const MeshPoint p_up = mesh_.point(up);
  const MeshPoint p_lo = mesh_.point(col);
  const double span = p_up.x - p_lo.x;
  if (span <= 0.0) return {};
  const double t_up = bath_time(mesh_.time(up));
  const double sgn = mesh_.sign(up);
  const ComplexMat2& W = system_.W;

  ComplexMat2 total;
  std::array<double, kMaxOrder> x{};
  std::array<double, kMaxOrder> s{};
  for (int m = 1; m <= config_.mbar; m += 2) {
    for (int k = 0; k < m; ++k) x[k] = p_lo.x + span * rng.uniform01();
    std::sort(x.begin(), x.begin() + m);
    int before = 0;
    for (int k = 0; k < m; ++k) {
      s[k] = bath_time(x[k] * h);
      if (x[k] <= n) ++before;
    }
    // W I(up, x_M) W I(x_M, x_{M-1}) ... W I(x_1, lo)
    MeshPoint upper = p_up;
    ComplexMat2 chain = ComplexMat2::identity();
    for (int k = m - 1; k >= 0; --k) {
      const MeshPoint p = sample_point(x[k], n, p_lo);
      chain = chain * W * interpolate(grid, upper, p, starred);
      upper = p;
    }
    chain = chain * W * interpolate(grid, upper, p_lo, starred);
    const Complex l = influence_L(bath_, t_up, std::span<const double>(s.data(), m));
    const double volume = std::pow(span * h, m) / factorial(m);
    const double sign = sgn * odd_phase(m) * (before % 2 == 0 ? 1.0 : -1.0);
    total += (sign * volume * l) * chain;
  }
  return total;
}

ComplexMat2 InchwormSolver::slope_mc(const PropagatorGrid& grid, GridNode up, GridNode col, int ns,
                                     Rng& rng, const Override* starred) const {
  ComplexMat2 sum;
  for (int k = 0; k < ns; ++k) sum += slope_sample(grid, up, col, rng, starred);
  return sum * (1.0 / ns);
}

StepSlopes InchwormSolver::step(PropagatorGrid& grid, GridNode row, GridNode col,
                                std::uint64_t replication) const {
  const GridNode prev = previous_row(row);
  const double h = config_.h();
  const int sp = mesh_.sign(prev);
  const int sr = mesh_.sign(row);
  const ComplexMat2& g_prev = grid.at(prev, col);

  const bool mc = config_.mode == SolveMode::MonteCarlo;
  StepSlopes k;
  if (mc) {
    Rng rng = slope_stream(config_.seed, replication, row, col, 1);
    k.K1 = slope_mc(grid, prev, col, config_.ns, rng);
  } else {
    k.K1 = slope_quadrature(grid, prev, col);
  }
  const ComplexMat2 g_star = march_matrix(sp, 1.0) * g_prev + h * k.K1;
  const Override starred{row, col, g_star};
  if (mc) {
    Rng rng = slope_stream(config_.seed, replication, row, col, 2);
    k.K2 = slope_mc(grid, row, col, config_.ns, rng, &starred);
  } else {
    k.K2 = slope_quadrature(grid, row, col, &starred);
  }
  const ComplexMat2 g = march_matrix(sp, 0.5) * g_prev +
                        (0.5 * sr * h) * (kI * system_.H) * g_star + (0.5 * h) * (k.K1 + k.K2);
  if (!is_finite(g) || frobenius_norm(g) > config_.divergence_guard)
    throw DivergenceError("inchworm step G(" + mesh_.name(row) + ", " + mesh_.name(col) +
                          ") diverged: norm " + std::to_string(frobenius_norm(g)));
  grid.set(row, col, g);
  return k;
}

PropagatorGrid InchwormSolver::solve(std::uint64_t replication) const {
  PropagatorGrid grid = empty_grid();
  for (const auto& level : antidiagonal_levels(mesh_)) {
    std::size_t steps = 0;
    while (steps < level.size() && level[steps].kind == EntryKind::Step) ++steps;
    // Report the failure of the lowest entry so the error does not depend on
    // thread timing.
    std::vector<std::exception_ptr> errors(steps);
    bool failed = false;
#pragma omp parallel for schedule(dynamic, 1) reduction(|| : failed)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(steps); ++i) {
      try {
        step(grid, level[i].row, level[i].col, replication);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        failed = true;
      }
    }
    if (failed)
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (std::size_t i = steps; i < level.size(); ++i) grid.apply_jump(level[i]);
  }
  return grid;
}

PropagatorGrid InchwormSolver::solve_serial(std::uint64_t replication) const {
  PropagatorGrid grid = empty_grid();
  for (const GridEntry& e : column_order(mesh_)) {
    if (e.kind == EntryKind::Step) {
      step(grid, e.row, e.col, replication);
    } else {
      grid.apply_jump(e);
    }
  }
  return grid;
}

ComplexMat2 observable_propagator(const PropagatorGrid& grid, int j) {
  const Mesh& mesh = grid.mesh();
  const int n = mesh.steps();
  if (j < 0 || j > n) throw std::out_of_range("observable_propagator: j outside [0, N]");
  if (j == 0) return grid.at(mesh.plus(), mesh.minus());
  return grid.at(mesh.regular(n + j), mesh.regular(n - j));
}

Complex observable_trace(const PropagatorGrid& grid, int j) {
  return observable_propagator(grid, j).a11();
}

void write_observable_csv(std::ostream& os, const PropagatorGrid& grid) {
  const Mesh& mesh = grid.mesh();
  os << "j,t_j,re_sigma_z,im_sigma_z\n";
  const auto old = os.precision(17);
  for (int j = 0; j <= mesh.steps(); ++j) {
    const Complex z = observable_trace(grid, j);
    os << j << ',' << j * mesh.h() << ',' << z.real() << ',' << z.imag() << '\n';
  }
  os.precision(old);
}

}  // namespace inchworm
