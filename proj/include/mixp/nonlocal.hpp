#pragma once

#include <functional>
#include <vector>

#include "mixp/calculus.hpp"
#include "mixp/grid.hpp"

namespace mixp {

/// Precomputed pair weights for the double sum over interior nodes and the
/// per-node exterior weights. On a uniform grid K_ij depends only on the index
/// offset, so the pair table is stored by offset (|di|, |dj|).
///
/// Pairs closer than `near_cells` * h use a cell-averaged coefficient of the
/// difference-weighted kernel,
///   K_ij = (w_i w_j)^{-1} |x_i - x_j|^{-p} \iint_{cell_i x cell_j} b|x-y|^{p-N-ps},
/// which stays finite for every p s (the plain cell average of |x-y|^{-N-ps}
/// diverges for adjacent cells once ps >= 1). Farther pairs use the midpoint
/// kernel.
class NonlocalAssembly {
 public:
  static constexpr double near_cells = 3.0;
  static constexpr double quad_tol = 1e-10;

  NonlocalAssembly(GridPtr grid, const Exponents& e);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Exponents& exponents() const { return exps_; }

  /// K_ij for the node offset (di, dj); (0,0) is excluded and returns 0.
  double kernel(int di, int dj = 0) const { return table_[offset_index(di, dj)]; }
  /// K_ij * w_i * w_j
  double pair_weight(int di, int dj = 0) const { return pair_[offset_index(di, dj)]; }
  double pair_weight(std::size_t i, std::size_t j) const;
  /// W_ext(x_i) = \int_{R^N \ Omega} K(x_i, y) dy
  double exterior_weight(std::size_t k) const { return exterior_[k]; }
  const std::vector<double>& exterior_weights() const { return exterior_; }

 private:
  std::size_t offset_index(int di, int dj) const {
    return static_cast<std::size_t>(di < 0 ? -di : di) +
           static_cast<std::size_t>(grid_->nodes(0)) * static_cast<std::size_t>(dj < 0 ? -dj : dj);
  }
  GridPtr grid_;
  Exponents exps_;
  std::vector<double> table_;
  std::vector<double> pair_;
  std::vector<double> exterior_;
};

/// Exterior weight at an arbitrary point of the box, via
///   W(x) = (b/ps) \oint R(theta)^{-ps} dtheta,
/// R(theta) the distance from x to the boundary along direction theta.
double exterior_weight(const Grid& grid, const Exponents& e, const Point& x);
std::vector<double> exterior_weight(const Grid& grid, const Exponents& e);

/// \int_{R^N \ B_r(center)} |z - y|^{-N-ps} dy for z inside the ball (no b).
double ball_exterior_integral(const Point& z, const Point& center, double r, const Exponents& e);

/// Cell-averaged difference-weighted coefficient for one offset (exposed for
/// tests).
double near_pair_coefficient(const Grid& grid, const Exponents& e, int di, int dj);

}  // namespace mixp
