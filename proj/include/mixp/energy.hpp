#pragma once

#include <span>
#include <vector>

#include "mixp/calculus.hpp"
#include "mixp/grid.hpp"
#include "mixp/nonlocal.hpp"

namespace mixp {

struct EnergyGrad {
  double energy = 0.0;
  GridFunction gradient;
};

/// (a/p) sum_samples H(grad u)^p * weight and its exact derivative.
EnergyGrad local_energy_grad(const GridFunction& u, const Exponents& e);

/// (1/2p) sum_{i != j} |u_i - u_j|^p K_ij w_i w_j + (1/p) sum_i |u_i|^p W_ext(x_i) w_i
/// and its exact derivative.
EnergyGrad nonlocal_energy_grad(const GridFunction& u, const NonlocalAssembly& assembly);

namespace detail {
// Span-level kernels used by the solver. Both add the gradient into `grad`
// and return the energy. Summation order is fixed independent of the thread
// count: rows are split into fixed-size chunks reduced in chunk order.
double accumulate_local(const Grid& g, const Exponents& e, std::span<const double> u, std::span<double> grad);
double accumulate_nonlocal(const NonlocalAssembly& as, std::span<const double> u, std::span<double> grad);
}  // namespace detail

/// Discrete \iint_{R^N x R^N} |u(x)-u(y)|^p |x-y|^{-N-ps} (zero extension),
/// i.e. 2p/b times the nonlocal energy.
double gagliardo_seminorm(const GridFunction& u, const NonlocalAssembly& assembly);
double gagliardo_seminorm(const GridFunction& u, double s, double p);

/// (sum_samples |grad u|_2^p weight)^{1/p}
double w1p_norm(const GridFunction& u, double p);
/// ||u||_{L^p(O')} + ||grad u||_{L^p(O')} over O' = {dist(x, boundary) >= inset},
/// restricted to nodes / cells whose centers lie in O'.
double local_w1p_norm(const GridFunction& u, double p, double inset);

/// (r^p sum_{nodes y, |y-x0| >= r} |u(y)|^{p-1} |y-x0|^{-N-ps} w_y)^{1/(p-1)}
double tail(const GridFunction& u, const Point& x0, double r, const Exponents& e);

/// Node statistics over the open ball B_r(x0) (node-center membership).
class BallStats {
 public:
  BallStats(const GridFunction& u, const Point& x0, double r);

  double sup() const { return sup_; }
  double inf() const { return inf_; }
  std::size_t count() const { return values_.size(); }
  /// (avg |u|^l)^{1/l}, l > 0
  double lp_mean(double l) const;
  /// Fraction of ball nodes with u >= k.
  double measure_fraction(double k) const;
  /// Largest k with measure_fraction(k) >= tau.
  double level_for_fraction(double tau) const;
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
  double sup_ = 0.0, inf_ = 0.0;
};

inline BallStats ball_stats(const GridFunction& u, const Point& x0, double r) { return {u, x0, r}; }

/// Nodes of the grid inside the open ball.
std::vector<std::size_t> ball_nodes(const Grid& g, const Point& x0, double r);
double distance(const Point& a, const Point& b, int dim);

}  // namespace mixp
