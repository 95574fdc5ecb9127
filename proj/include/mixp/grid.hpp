#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mixp {

using Point = std::array<double, 2>;

/// Uniform tensor grid on (0,L1) x ... with M interior nodes per axis and
/// spacing h = L/(M+1). Only interior nodes carry unknowns; boundary nodes and
/// everything outside the box hold the value 0.
class Grid {
 public:
  /// Low-level constructor, accepts M >= 1 per axis. Use make_grid for
  /// validated experiment grids.
  Grid(int dim, std::array<double, 2> extent, std::array<int, 2> nodes, double delta = 0.0);

  int dim() const { return dim_; }
  double extent(int axis) const { return extent_[axis]; }
  int nodes(int axis) const { return m_[axis]; }
  double h(int axis) const { return h_[axis]; }
  double max_h() const;
  double min_extent() const;
  double diameter() const;
  double delta() const { return delta_; }
  std::size_t size() const { return size_; }
  /// Volume attached to each interior node, prod h.
  double node_volume() const { return volume_; }
  double domain_volume() const;

  std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(i) + static_cast<std::size_t>(m_[0]) * j; }
  std::array<int, 2> ij(std::size_t k) const;
  Point point(std::size_t k) const;
  double dist_to_boundary(std::size_t k) const;
  double dist_to_boundary(const Point& x) const;
  bool in_strip(std::size_t k) const { return dist_to_boundary(k) < delta_; }
  std::vector<bool> strip_mask() const;

  /// Number of cells (between consecutive nodes including boundary nodes) and
  /// gradient samples per cell: 1 in 1D, 4 corner gradients in 2D.
  std::size_t cells() const;
  int samples_per_cell() const { return dim_ == 1 ? 1 : 4; }
  double cell_volume() const { return volume_; }
  Point cell_center(std::size_t c) const;

 private:
  int dim_;
  std::array<double, 2> extent_;
  std::array<int, 2> m_;
  std::array<double, 2> h_;
  double delta_;
  std::size_t size_;
  double volume_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Validated factory: M >= 3 per axis, 0 <= delta < half the minimal extent.
GridPtr make_grid(int dim, std::array<double, 2> extent, std::array<int, 2> nodes, double delta);

/// Node values on a grid; zero extension outside the interior nodes.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(GridPtr grid, double fill = 0.0);
  GridFunction(GridPtr grid, std::vector<double> values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double a);
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double a, GridFunction u) { return u *= a; }

  GridFunction max(const GridFunction& o) const;
  GridFunction min(const GridFunction& o) const;
  GridFunction pos() const;        ///< k^+ = max(k, 0)
  GridFunction neg() const;        ///< k^- = max(-k, 0)
  GridFunction neg_part() const;   ///< k_- = min(k, 0)
  GridFunction pow(double e) const;  ///< |u|^e elementwise

  double sup() const;
  double inf() const;
  double sup_abs() const;
  /// Node-volume weighted sum of |u|^q.
  double lp_norm(double q) const;

  /// Apply a scalar map to each node value.
  template <class F>
  GridFunction map(F&& f) const {
    GridFunction out(grid_, values_);
    for (double& v : out.values_) v = f(v);
    return out;
  }

 private:
  void require_same_grid(const GridFunction& o) const;
  GridPtr grid_;
  std::vector<double> values_;
};

/// Per-cell gradient samples (forward differences using the zero boundary
/// values). In 2D each cell carries the four corner gradients.
struct CellGradients {
  int samples_per_cell = 1;
  double sample_weight = 0.0;  ///< cell volume / samples_per_cell
  std::vector<std::array<double, 2>> g;
  std::size_t cell_of(std::size_t sample) const { return sample / samples_per_cell; }
};
/// `boundary_value` is the value assigned to boundary nodes (0 for the zero
/// extension; transformed fields such as (u-k)^- use their own).
CellGradients discrete_gradient(const GridFunction& u, double boundary_value = 0.0);

/// CSV with header `x[,y],u`, one interior node per row, 17 significant digits.
/// Optional comment lines (prefixed by '#') are written before the header.
void write_csv(std::ostream& os, const GridFunction& u, const std::vector<std::string>& comments = {});
/// Reads a field written by write_csv onto the given grid (rows may be in any
/// order; coordinates must match nodes to 1e-9 relative).
GridFunction read_csv(std::istream& is, GridPtr grid);

}  // namespace mixp
