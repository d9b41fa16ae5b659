#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "inchworm/errors.hpp"
#include "inchworm/mesh.hpp"
#include "oracles.hpp"

using namespace inchworm;

namespace {

bool close(const ComplexMat2& a, const ComplexMat2& b, double tol) {
  return frobenius_norm(a - b) <= tol;
}

// Every entry of `order` appears after all entries it reads.
void check_dependencies(const Mesh& mesh, const std::vector<GridEntry>& order) {
  const int labels = mesh.label_count();
  std::map<std::pair<int, int>, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i)
    pos[{order[i].row.label, order[i].col.label}] = i;
  REQUIRE(pos.size() == order.size());
  REQUIRE(order.size() == static_cast<std::size_t>(labels * (labels - 1) / 2 - 1));
  const auto is_fixed = [&](int r, int c) {
    return r == c || (r == mesh.plus().label && c == mesh.minus().label);
  };
  for (std::size_t i = 0; i < order.size(); ++i) {
    const GridEntry& e = order[i];
    const int row = e.row.label, col = e.col.label;
    if (e.kind == EntryKind::Step) {
      for (int j = col; j <= row; ++j)
        for (int k = col; k < j; ++k) {
          if ((j == row && k == col) || is_fixed(j, k)) continue;
          CHECK(pos.at({j, k}) < i);
        }
    } else if (e.kind == EntryKind::RowJump) {
      CHECK(row == mesh.plus().label);
      if (!is_fixed(mesh.minus().label, col)) CHECK(pos.at({mesh.minus().label, col}) < i);
    } else {
      CHECK(col == mesh.minus().label);
      if (!is_fixed(row, mesh.plus().label)) CHECK(pos.at({row, mesh.plus().label}) < i);
    }
  }
}

}  // namespace

TEST_CASE("node ordering and times") {
  const Mesh m(4, 1.0);
  CHECK(m.label_count() == 10);
  CHECK(m.regular(3) < m.minus());
  CHECK(m.minus() < m.plus());
  CHECK(m.plus() < m.regular(5));
  CHECK(m.time(m.minus()) == 1.0);
  CHECK(m.time(m.plus()) == 1.0);
  CHECK(m.time(m.regular(6)) == doctest::Approx(1.5));
  CHECK(m.sign(m.minus()) == -1);
  CHECK(m.sign(m.plus()) == 1);
  CHECK(m.name(m.minus()) == "N-");
  CHECK(m.name(m.plus()) == "N+");
  CHECK(m.parse("N+") == m.plus());
  CHECK(m.parse("7") == m.regular(7));
  CHECK_THROWS(m.regular(4));
}

TEST_CASE("sign of a plain time") {
  CHECK(time_sign(0.3, 1.0) == -1);
  CHECK(time_sign(1.7, 1.0) == 1);
  CHECK_THROWS_AS(time_sign(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("entry count at N = 5") {
  const Mesh m(5, 1.0);
  // 12 labels: 66 off-diagonal pairs minus the fixed G(N+, N-).
  CHECK(computation_order(m).size() == 65);
  CHECK(column_order(m).size() == 65);
}

TEST_CASE("both orders respect dependencies") {
  for (int n = 1; n <= 8; ++n) {
    const Mesh m(n, 0.5 * n);
    check_dependencies(m, computation_order(m));
    check_dependencies(m, column_order(m));
    std::set<std::pair<int, int>> a, b;
    for (const auto& e : computation_order(m)) a.insert({e.row.label, e.col.label});
    for (const auto& e : column_order(m)) b.insert({e.row.label, e.col.label});
    CHECK(a == b);
  }
}

TEST_CASE("step entries of a level are independent") {
  const Mesh m(6, 1.0);
  for (const auto& level : antidiagonal_levels(m)) {
    std::set<std::pair<int, int>> steps;
    for (const auto& e : level)
      if (e.kind == EntryKind::Step) steps.insert({e.row.label, e.col.label});
    for (const auto& e : level) {
      if (e.kind != EntryKind::Step) continue;
      for (const auto& [r, c] : steps) {
        if (r == e.row.label && c == e.col.label) continue;
        const bool inside = c >= e.col.label && r <= e.row.label;
        CHECK_FALSE(inside);
      }
    }
  }
}

TEST_CASE("grid boundary values and missing entries") {
  const Mesh m(3, 1.0);
  const ComplexMat2 O = pauli_z();
  PropagatorGrid g(m, O);
  CHECK(g.at(m.regular(2), m.regular(2)) == ComplexMat2::identity());
  CHECK(g.at(m.minus(), m.minus()) == ComplexMat2::identity());
  CHECK(g.at(m.plus(), m.minus()) == O);
  CHECK_FALSE(g.has(m.regular(1), m.regular(0)));
  CHECK_THROWS_AS(g.at(m.regular(1), m.regular(0)), MissingDependencyError);
}

TEST_CASE("jump entries copy the split partner") {
  const Mesh m(3, 1.0);
  const ComplexMat2 O = pauli_z();
  PropagatorGrid g(m, O);
  const ComplexMat2 a = ComplexMat2::rows(1.0, Complex(0, 2), 3.0, 4.0);
  g.set(m.minus(), m.regular(1), a);
  g.apply_jump({m.plus(), m.regular(1), EntryKind::RowJump});
  CHECK(g.at(m.plus(), m.regular(1)) == O * a);
  g.set(m.regular(5), m.plus(), a);
  g.apply_jump({m.regular(5), m.minus(), EntryKind::ColumnJump});
  CHECK(g.at(m.regular(5), m.minus()) == a * O);
}

TEST_CASE("interpolation reproduces nodal values") {
  const Mesh m(4, 1.0);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PropagatorGrid g(m, pauli_z());
  for (int r = 0; r < m.label_count(); ++r)
    for (int c = 0; c < r; ++c) {
      if (r == m.plus().label && c == m.minus().label) continue;
      g.set({r}, {c}, ComplexMat2::rows(Complex(u(gen), u(gen)), u(gen), u(gen), Complex(0, u(gen))));
    }
  for (int r = 0; r < m.label_count(); ++r)
    for (int c = 0; c <= r; ++c)
      CHECK(interpolate(g, m.point({r}), m.point({c})) == g.at({r}, {c}));

  // Convex combinations never exceed the largest nodal norm.
  std::uniform_real_distribution<double> x(0.0, 8.0);
  for (int k = 0; k < 200; ++k) {
    double a = x(gen), b = x(gen);
    if (a < b) std::swap(a, b);
    CHECK(frobenius_norm(interpolate(g, m.point_at(a), m.point_at(b))) <= g.max_norm() + 1e-12);
  }
}

TEST_CASE("interpolation is exact for linear data") {
  const Mesh m(4, 1.0);
  const ComplexMat2 A = ComplexMat2::rows(1.0, Complex(0, 1), 2.0, -1.0);
  const ComplexMat2 B = ComplexMat2::rows(Complex(0.5, 0.1), 0.0, 0.3, 0.2);
  const ComplexMat2 C = ComplexMat2::rows(-0.2, 0.7, Complex(0, -0.4), 0.1);
  const auto ell = [&](double up, double lo) { return A + up * B + lo * C; };
  const double n = m.steps();
  PropagatorGrid g(m, ell(n, n));
  for (int r = 0; r < m.label_count(); ++r)
    for (int c = 0; c < r; ++c) {
      if (r == m.plus().label && c == m.minus().label) continue;
      g.set({r}, {c}, ell(m.position({r}), m.position({c})));
    }
  // Diagonal entries are pinned to I, so stay two cells clear of the diagonal.
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> x(0.0, 2.0 * n);
  int tested = 0;
  while (tested < 100) {
    double a = x(gen), b = x(gen);
    if (a < b) std::swap(a, b);
    if (std::floor(a) - std::floor(b) < 2.0) continue;
    CHECK(close(interpolate(g, m.point_at(a), m.point_at(b)), ell(a, b), 1e-12));
    ++tested;
  }
}

TEST_CASE("interpolation is exact for linear data equal to I on the diagonal") {
  const Mesh m(4, 1.0);
  const ComplexMat2 B = ComplexMat2::rows(Complex(0.5, 0.1), 0.0, 0.3, Complex(0.2, -0.6));
  const auto ell = [&](double up, double lo) { return ComplexMat2::identity() + (up - lo) * B; };
  PropagatorGrid g(m, ComplexMat2::identity());
  for (int r = 0; r < m.label_count(); ++r)
    for (int c = 0; c < r; ++c) {
      if (r == m.plus().label && c == m.minus().label) continue;
      g.set({r}, {c}, ell(m.position({r}), m.position({c})));
    }
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> x(0.0, 2.0 * m.steps());
  for (int k = 0; k < 100; ++k) {
    double a = x(gen), b = x(gen);
    if (a < b) std::swap(a, b);
    CHECK(close(interpolate(g, m.point_at(a), m.point_at(b)), ell(a, b), 1e-12));
  }
}

TEST_CASE("one-sided limits at the observation time") {
  const Mesh m(4, 1.0);
  const ComplexMat2 H = pauli_z() + pauli_x();
  const ComplexMat2 O = pauli_z();
  const PropagatorGrid g = oracle::free_grid(m, H, O);
  const double n = m.steps();
  CHECK(interpolate(g, {n, Side::After}, {n, Side::Before}) == O);
  for (double lo : {0.0, 1.3, 2.5, 3.9}) {
    const ComplexMat2 after = interpolate(g, {n, Side::After}, {lo, Side::Before});
    const ComplexMat2 before = interpolate(g, {n, Side::Before}, {lo, Side::Before});
    CHECK(close(after, O * before, 1e-14));
  }
  for (double up : {4.2, 5.5, 8.0}) {
    const ComplexMat2 lo_minus = interpolate(g, {up, Side::After}, {n, Side::Before});
    const ComplexMat2 lo_plus = interpolate(g, {up, Side::After}, {n, Side::After});
    CHECK(close(lo_minus, lo_plus * O, 1e-14));
  }
}

TEST_CASE("override replaces one node") {
  const Mesh m(2, 1.0);
  const PropagatorGrid g = oracle::free_grid(m, pauli_x(), pauli_z());
  const GridNode r = m.regular(1), c = m.regular(0);
  const Override same{r, c, g.at(r, c)};
  const Override other{r, c, 2.0 * ComplexMat2::identity()};
  const MeshPoint up{0.7, Side::Before}, lo{0.2, Side::Before};
  CHECK(interpolate(g, up, lo, &same) == interpolate(g, up, lo));
  CHECK_FALSE(interpolate(g, up, lo, &other) == interpolate(g, up, lo));
  CHECK(interpolate(g, m.point(r), m.point(c), &other) == other.value);
}

TEST_CASE("grid snapshot round trip") {
  const Mesh m(3, 0.75);
  const PropagatorGrid g = oracle::free_grid(m, pauli_z() + pauli_x(), pauli_z());
  std::ostringstream os;
  write_grid_csv(os, g);
  CHECK(os.str().rfind("j,k,re11,im11,re21,im21,re12,im12,re22,im22\n", 0) == 0);
  CHECK(os.str().find("N-") != std::string::npos);
  std::istringstream is(os.str());
  const PropagatorGrid back = read_grid_csv(is, m, pauli_z());
  for (int r = 0; r < m.label_count(); ++r)
    for (int c = 0; c <= r; ++c) CHECK(back.at({r}, {c}) == g.at({r}, {c}));
}
