#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "inchworm/algebra.hpp"

namespace inchworm {

// A node of the time mesh 0, h, ..., 2t with h = t/N. The node at the
// observation time t exists in two copies: N- (limit from below) and N+
// (limit from above). Labels are ordered
//   0, 1, ..., N-1, N-, N+, N+1, ..., 2N
// and stored as 0 .. 2N+1, so label N is N- and label N+1 is N+.
struct GridNode {
  int label = 0;
  friend constexpr auto operator<=>(GridNode, GridNode) = default;
};

// Which one-sided limit a point sitting exactly on t refers to. Away from t
// the side is irrelevant.
enum class Side { Before, After };

// A point of [0, 2t] in step units (x = s / h).
struct MeshPoint {
  double x = 0.0;
  Side side = Side::Before;
};

class Mesh {
 public:
  Mesh(int steps, double t);

  int steps() const { return n_; }
  double t() const { return t_; }
  double h() const { return h_; }
  int label_count() const { return 2 * n_ + 2; }

  GridNode regular(int j) const;  // j in [0, 2N], j != N
  GridNode minus() const { return {n_}; }
  GridNode plus() const { return {n_ + 1}; }
  // Node for time index j; j == N resolves to the requested side.
  GridNode node(int j, Side side_at_t) const;

  bool is_split(GridNode v) const { return v.label == n_ || v.label == n_ + 1; }
  int time_index(GridNode v) const { return v.label <= n_ ? v.label : v.label - 1; }
  double position(GridNode v) const { return static_cast<double>(time_index(v)); }
  double time(GridNode v) const { return time_index(v) * h_; }
  // sgn(t_v - t) with N- -> -1 and N+ -> +1.
  int sign(GridNode v) const { return v.label <= n_ ? -1 : 1; }

  MeshPoint point(GridNode v) const {
    return {position(v), v.label <= n_ ? Side::Before : Side::After};
  }
  // A generic point; x == N counts as lying before t.
  MeshPoint point_at(double x) const {
    return {x, x <= static_cast<double>(n_) ? Side::Before : Side::After};
  }

  // "N-", "N+" or the time index.
  std::string name(GridNode v) const;
  GridNode parse(const std::string& name) const;

 private:
  int n_;
  double t_;
  double h_;
};

// sgn(s - t) for a plain time; s == t is ambiguous and throws
// std::invalid_argument (callers pass a split node instead).
int time_sign(double s, double t);

enum class EntryKind {
  Step,       // computed by the two-stage scheme from the previous row
  RowJump,    // G(N+, k) = O_s G(N-, k)
  ColumnJump  // G(j, N-) = G(j, N+) O_s
};

struct GridEntry {
  GridNode row;
  GridNode col;
  EntryKind kind = EntryKind::Step;
  friend bool operator==(const GridEntry&, const GridEntry&) = default;
};

// Off-diagonal entries grouped by time gap j - k = 1 .. 2N. Within a level the
// Step entries are mutually independent; the jump entries of a level follow
// its Step entries.
std::vector<std::vector<GridEntry>> antidiagonal_levels(const Mesh& mesh);

// antidiagonal_levels flattened: every off-diagonal entry except the fixed
// boundary value G(N+, N-) appears exactly once, after all its dependencies.
std::vector<GridEntry> computation_order(const Mesh& mesh);

// The same entries ordered column by column in s_up, each column from the
// diagonal downwards; used by the serial reference solver.
std::vector<GridEntry> column_order(const Mesh& mesh);

// Row label whose value a Step entry is marched from.
inline GridNode previous_row(GridNode row) { return {row.label - 1}; }

// Lower-triangular table of propagators on the mesh. Diagonal entries are the
// identity and G(N+, N-) = O_s from construction.
class PropagatorGrid {
 public:
  PropagatorGrid(Mesh mesh, const ComplexMat2& observable);

  const Mesh& mesh() const { return mesh_; }
  const ComplexMat2& observable() const { return observable_; }

  bool has(GridNode row, GridNode col) const { return filled_[index(row, col)] != 0; }
  // Throws MissingDependencyError if the entry has not been written yet.
  const ComplexMat2& at(GridNode row, GridNode col) const;
  void set(GridNode row, GridNode col, const ComplexMat2& value);

  // Fills a RowJump or ColumnJump entry from its partner copy.
  void apply_jump(const GridEntry& entry);

  // Largest Frobenius norm over filled entries.
  double max_norm() const;

  std::size_t entry_count() const { return values_.size(); }

 private:
  std::size_t index(GridNode row, GridNode col) const;

  Mesh mesh_;
  ComplexMat2 observable_;
  std::vector<ComplexMat2> values_;
  std::vector<unsigned char> filled_;
};

// Replaces the value at one node (the provisional predictor value) during
// interpolation.
struct Override {
  GridNode row;
  GridNode col;
  ComplexMat2 value;
};

/// Piecewise-linear interpolation of the grid at (s_up, s_lo), s_lo <= s_up.
/// Each mesh square is split by the diagonal parallel to s_up = s_lo. Cells
/// adjacent to t use the N-/N+ copy on their own side, so one-sided limits at
/// t reproduce the split values. Vertices with zero barycentric weight are
/// never read. Throws MissingDependencyError when a needed vertex is unset.
ComplexMat2 interpolate(const PropagatorGrid& grid, MeshPoint up, MeshPoint lo,
                        const Override* starred = nullptr);

// CSV snapshot "j,k,re11,im11,re21,im21,re12,im12,re22,im22", one row per
// filled entry, split nodes written as N- / N+.
void write_grid_csv(std::ostream& os, const PropagatorGrid& grid);
PropagatorGrid read_grid_csv(std::istream& is, const Mesh& mesh, const ComplexMat2& observable);

}  // namespace inchworm
