#include "inchworm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "inchworm/errors.hpp"

namespace inchworm {

Mesh::Mesh(int steps, double t) : n_(steps), t_(t), h_(t / steps) {
  if (steps < 1) throw std::invalid_argument("Mesh: need at least one step");
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("Mesh: t must be positive");
}

GridNode Mesh::regular(int j) const {
  if (j < 0 || j > 2 * n_ || j == n_)
    throw std::out_of_range("Mesh::regular: index " + std::to_string(j) + " is not a regular node");
  return {j < n_ ? j : j + 1};
}

GridNode Mesh::node(int j, Side side_at_t) const {
  if (j == n_) return side_at_t == Side::Before ? minus() : plus();
  return regular(j);
}

std::string Mesh::name(GridNode v) const {
  if (v.label == n_) return "N-";
  if (v.label == n_ + 1) return "N+";
  return std::to_string(time_index(v));
}

GridNode Mesh::parse(const std::string& name) const {
  if (name == "N-") return minus();
  if (name == "N+") return plus();
  std::size_t used = 0;
  const int j = std::stoi(name, &used);
  if (used != name.size()) throw std::invalid_argument("Mesh::parse: bad node name '" + name + "'");
  return regular(j);
}

int time_sign(double s, double t) {
  if (s < t) return -1;
  if (s > t) return 1;
  throw std::invalid_argument("time_sign: s equals t; pass the N- or N+ node instead");
}

namespace {

void emit_entries(const Mesh& mesh, int r, int c, std::vector<GridEntry>& steps,
                  std::vector<GridEntry>& jumps) {
  const int n = mesh.steps();
  if (r == n + 1) {
    if (c < n) jumps.push_back({{r}, {c}, EntryKind::RowJump});
  } else if (c == n) {
    if (r >= n + 2) jumps.push_back({{r}, {c}, EntryKind::ColumnJump});
  } else {
    steps.push_back({{r}, {c}, EntryKind::Step});
  }
}

}  // namespace

std::vector<std::vector<GridEntry>> antidiagonal_levels(const Mesh& mesh) {
  const int labels = mesh.label_count();
  const int n = mesh.steps();
  std::vector<std::vector<GridEntry>> steps(static_cast<std::size_t>(2 * n) + 1);
  std::vector<std::vector<GridEntry>> jumps(steps.size());
  for (int c = 0; c < labels; ++c)
    for (int r = c + 1; r < labels; ++r) {
      const int gap = mesh.time_index({r}) - mesh.time_index({c});
      if (gap == 0) continue;  // G(N+, N-) is a boundary value
      emit_entries(mesh, r, c, steps[gap], jumps[gap]);
    }
  std::vector<std::vector<GridEntry>> levels;
  levels.reserve(static_cast<std::size_t>(2 * n));
  for (std::size_t gap = 1; gap < steps.size(); ++gap) {
    auto level = std::move(steps[gap]);
    level.insert(level.end(), jumps[gap].begin(), jumps[gap].end());
    levels.push_back(std::move(level));
  }
  return levels;
}

std::vector<GridEntry> computation_order(const Mesh& mesh) {
  std::vector<GridEntry> out;
  for (auto& level : antidiagonal_levels(mesh)) out.insert(out.end(), level.begin(), level.end());
  return out;
}

std::vector<GridEntry> column_order(const Mesh& mesh) {
  const int labels = mesh.label_count();
  std::vector<GridEntry> out;
  std::vector<GridEntry> jumps;
  for (int r = 1; r < labels; ++r)
    for (int c = r - 1; c >= 0; --c) {
      if (mesh.time_index({r}) == mesh.time_index({c})) continue;
      jumps.clear();
      emit_entries(mesh, r, c, out, jumps);
      out.insert(out.end(), jumps.begin(), jumps.end());
    }
  return out;
}

PropagatorGrid::PropagatorGrid(Mesh mesh, const ComplexMat2& observable)
    : mesh_(mesh), observable_(observable) {
  const auto labels = static_cast<std::size_t>(mesh_.label_count());
  values_.assign(labels * (labels + 1) / 2, ComplexMat2::zero());
  filled_.assign(values_.size(), 0);
  for (int v = 0; v < mesh_.label_count(); ++v) set({v}, {v}, ComplexMat2::identity());
  set(mesh_.plus(), mesh_.minus(), observable_);
}

std::size_t PropagatorGrid::index(GridNode row, GridNode col) const {
  if (col.label < 0 || row.label < col.label || row.label >= mesh_.label_count())
    throw std::out_of_range("PropagatorGrid: entry (" + std::to_string(row.label) + ", " +
                            std::to_string(col.label) + ") outside the lower triangle");
  const auto r = static_cast<std::size_t>(row.label);
  return r * (r + 1) / 2 + static_cast<std::size_t>(col.label);
}

const ComplexMat2& PropagatorGrid::at(GridNode row, GridNode col) const {
  const std::size_t i = index(row, col);
  if (!filled_[i])
    throw MissingDependencyError("grid value G(" + mesh_.name(row) + ", " + mesh_.name(col) +
                                 ") read before it was computed");
  return values_[i];
}

void PropagatorGrid::set(GridNode row, GridNode col, const ComplexMat2& value) {
  const std::size_t i = index(row, col);
  values_[i] = value;
  filled_[i] = 1;
}

void PropagatorGrid::apply_jump(const GridEntry& entry) {
  switch (entry.kind) {
    case EntryKind::RowJump:
      set(entry.row, entry.col, observable_ * at(mesh_.minus(), entry.col));
      break;
    case EntryKind::ColumnJump:
      set(entry.row, entry.col, at(entry.row, mesh_.plus()) * observable_);
      break;
    case EntryKind::Step:
      throw std::logic_error("apply_jump called on a Step entry");
  }
}

double PropagatorGrid::max_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (filled_[i]) m = std::max(m, frobenius_norm(values_[i]));
  return m;
}

namespace {

struct CellCoord {
  int cell;
  double frac;
};

bool is_integer(double x) { return x == std::floor(x); }

CellCoord locate_up(double x, Side side, int n) {
  if (is_integer(x)) {
    const int j = static_cast<int>(x);
    if (j == n) return side == Side::Before ? CellCoord{n - 1, 1.0} : CellCoord{n, 0.0};
    if (j == 0) return {0, 0.0};
    return {j - 1, 1.0};
  }
  const double f = std::floor(x);
  return {static_cast<int>(f), x - f};
}

CellCoord locate_lo(double x, Side side, int n) {
  if (is_integer(x)) {
    const int k = static_cast<int>(x);
    if (k == n) return side == Side::Before ? CellCoord{n - 1, 1.0} : CellCoord{n, 0.0};
    return {k, 0.0};
  }
  const double f = std::floor(x);
  return {static_cast<int>(f), x - f};
}

// Label of time index `index` seen from a cell whose lower corner is `cell`.
int vertex_label(int index, int cell, int n) {
  if (index < n) return index;
  if (index > n) return index + 1;
  return cell == n - 1 ? n : n + 1;
}

}  // namespace

ComplexMat2 interpolate(const PropagatorGrid& grid, MeshPoint up, MeshPoint lo,
                        const Override* starred) {
  const int n = grid.mesh().steps();
  const double x_max = 2.0 * n;
  if (!(lo.x >= 0.0) || !(up.x <= x_max) || lo.x > up.x)
    throw std::out_of_range("interpolate: point outside 0 <= s_lo <= s_up <= 2t");
  const CellCoord cu = locate_up(up.x, up.side, n);
  const CellCoord cl = locate_lo(lo.x, lo.side, n);

  struct Vertex {
    int up;
    int lo;
    double weight;
  };
  Vertex verts[3];
  if (cu.frac >= cl.frac) {
    verts[0] = {cu.cell, cl.cell, 1.0 - cu.frac};
    verts[1] = {cu.cell + 1, cl.cell, cu.frac - cl.frac};
    verts[2] = {cu.cell + 1, cl.cell + 1, cl.frac};
  } else {
    verts[0] = {cu.cell, cl.cell, 1.0 - cl.frac};
    verts[1] = {cu.cell, cl.cell + 1, cl.frac - cu.frac};
    verts[2] = {cu.cell + 1, cl.cell + 1, cu.frac};
  }

  ComplexMat2 out;
  for (const Vertex& v : verts) {
    if (v.weight == 0.0) continue;
    const GridNode row{vertex_label(v.up, cu.cell, n)};
    const GridNode col{vertex_label(v.lo, cl.cell, n)};
    if (starred && starred->row == row && starred->col == col) {
      out += v.weight * starred->value;
    } else {
      out += v.weight * grid.at(row, col);
    }
  }
  return out;
}

void write_grid_csv(std::ostream& os, const PropagatorGrid& grid) {
  const Mesh& mesh = grid.mesh();
  os << "j,k,re11,im11,re21,im21,re12,im12,re22,im22\n";
  const auto old = os.precision(17);
  for (int r = 0; r < mesh.label_count(); ++r)
    for (int c = 0; c <= r; ++c) {
      if (!grid.has({r}, {c})) continue;
      os << mesh.name({r}) << ',' << mesh.name({c});
      for (const auto& z : grid.at({r}, {c}).entries()) os << ',' << z.real() << ',' << z.imag();
      os << '\n';
    }
  os.precision(old);
}

PropagatorGrid read_grid_csv(std::istream& is, const Mesh& mesh, const ComplexMat2& observable) {
  PropagatorGrid grid(mesh, observable);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("read_grid_csv: empty input");
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::invalid_argument("read_grid_csv: line " + std::to_string(line_no) +
                                  " does not have 10 fields");
    ComplexMat2 value;
    for (int e = 0; e < 4; ++e)
      value.entries()[e] = Complex(std::stod(fields[2 + 2 * e]), std::stod(fields[3 + 2 * e]));
    grid.set(mesh.parse(fields[0]), mesh.parse(fields[1]), value);
  }
  return grid;
}

}  // namespace inchworm
