#include "mixp/nonlocal.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "mixp/error.hpp"

namespace mixp {

namespace {

using boost::math::quadrature::gauss_kronrod;
using boost::math::quadrature::tanh_sinh;

constexpr double two_pi = 2.0 * std::numbers::pi;

// Adaptive Gauss-Kronrod on a smooth piece; throws when the estimate misses
// the tolerance by a wide margin.
template <class F>
double smooth_integral(F&& f, double a, double b, double tol) {
  double err = 0.0, l1 = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err, &l1);
  if (err > 1e3 * tol * std::max(l1, std::abs(v)) + 1e-300)
    throw IntegrationError("adaptive Gauss-Kronrod did not reach tolerance", err / std::max(l1, 1e-300));
  return v;
}

// Integral of w(t) over a piece [a, b] of the triangle autocorrelation
// t -> max(0, h - |t - d|), which is linear on each piece.
struct TriPiece {
  double a, b;  // integration range
  double c, slope;  // weight = c + slope * t
};

std::vector<TriPiece> tri_pieces(double d, double h) {
  return {{d - h, d, h - d, 1.0}, {d, d + h, h + d, -1.0}};
}

double near_coefficient_1d(double d, double h, const Exponents& e) {
  const double alpha = e.p() - 1.0 - e.p() * e.s();  // > -1
  auto f1 = [&](double z) { return std::pow(z, alpha + 1.0) / (alpha + 1.0); };
  auto f2 = [&](double z) { return std::pow(z, alpha + 2.0) / (alpha + 2.0); };
  double integral = 0.0;
  for (const auto& piece : tri_pieces(d, h)) {
    integral += piece.c * (f1(piece.b) - f1(piece.a)) + piece.slope * (f2(piece.b) - f2(piece.a));
  }
  return e.b() * integral / (h * h) / std::pow(d, e.p());
}

double near_coefficient_2d(double dx, double dy, double hx, double hy, const Exponents& e) {
  const double half_alpha = 0.5 * (e.p() - 2.0 - e.p() * e.s());  // alpha > -2
  tanh_sinh<double> outer_rule, inner_rule;
  double total = 0.0;
  for (const auto& px : tri_pieces(dx, hx)) {
    for (const auto& py : tri_pieces(dy, hy)) {
      auto inner = [&](double zx) {
        const double wx = px.c + px.slope * zx;
        auto g = [&](double zy) {
          const double r2 = zx * zx + zy * zy;
          if (r2 == 0.0) return 0.0;
          return (py.c + py.slope * zy) * std::pow(r2, half_alpha);
        };
        double err = 0.0;
        return wx * inner_rule.integrate(g, py.a, py.b, NonlocalAssembly::quad_tol, &err);
      };
      double err = 0.0, l1 = 0.0;
      const double v = outer_rule.integrate(inner, px.a, px.b, NonlocalAssembly::quad_tol, &err, &l1);
      if (!std::isfinite(v) || err > 1e-6 * std::max(l1, 1e-300))
        throw IntegrationError("near-diagonal kernel average failed", err / std::max(l1, 1e-300));
      total += v;
    }
  }
  const double dist = std::hypot(dx, dy);
  return e.b() * total / (hx * hx * hy * hy) / std::pow(dist, e.p());
}

// Distance from x to the boundary of the box along direction theta.
double ray_exit(const Grid& g, const Point& x, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  double t = std::numeric_limits<double>::infinity();
  if (c > 0) t = std::min(t, (g.extent(0) - x[0]) / c);
  if (c < 0) t = std::min(t, -x[0] / c);
  if (s > 0) t = std::min(t, (g.extent(1) - x[1]) / s);
  if (s < 0) t = std::min(t, -x[1] / s);
  return t;
}

}  // namespace

double near_pair_coefficient(const Grid& grid, const Exponents& e, int di, int dj) {
  di = std::abs(di);
  dj = std::abs(dj);
  if (di == 0 && dj == 0) throw SingularPoint("self pairs carry no kernel weight");
  if (grid.dim() == 1) return near_coefficient_1d(di * grid.h(0), grid.h(0), e);
  return near_coefficient_2d(di * grid.h(0), dj * grid.h(1), grid.h(0), grid.h(1), e);
}

double exterior_weight(const Grid& grid, const Exponents& e, const Point& x) {
  const double ps = e.p() * e.s();
  if (grid.dist_to_boundary(x) <= 0.0) throw SingularPoint("exterior weight requested on the boundary");
  if (grid.dim() == 1) {
    return e.b() / ps * (std::pow(x[0], -ps) + std::pow(grid.extent(0) - x[0], -ps));
  }
  std::vector<double> corners = {
      std::atan2(grid.extent(1) - x[1], grid.extent(0) - x[0]), std::atan2(grid.extent(1) - x[1], -x[0]),
      std::atan2(-x[1], -x[0]), std::atan2(-x[1], grid.extent(0) - x[0])};
  for (double& c : corners)
    if (c < 0) c += two_pi;
  std::sort(corners.begin(), corners.end());
  corners.push_back(corners.front() + two_pi);
  auto f = [&](double theta) { return std::pow(ray_exit(grid, x, theta), -ps); };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < corners.size(); ++k)
    total += smooth_integral(f, corners[k], corners[k + 1], NonlocalAssembly::quad_tol);
  return e.b() / ps * total;
}

std::vector<double> exterior_weight(const Grid& grid, const Exponents& e) {
  std::vector<double> w(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) w[k] = exterior_weight(grid, e, grid.point(k));
  return w;
}

double ball_exterior_integral(const Point& z, const Point& center, double r, const Exponents& e) {
  const double ps = e.p() * e.s();
  if (e.dim() == 1) {
    const double lo = z[0] - (center[0] - r), hi = center[0] + r - z[0];
    if (!(lo > 0.0 && hi > 0.0)) throw InvalidInput("ball_exterior_integral: point outside the ball");
    return (std::pow(lo, -ps) + std::pow(hi, -ps)) / ps;
  }
  const double vx = z[0] - center[0], vy = z[1] - center[1];
  const double v2 = vx * vx + vy * vy;
  if (!(v2 < r * r)) throw InvalidInput("ball_exterior_integral: point outside the ball");
  auto f = [&](double theta) {
    const double vu = vx * std::cos(theta) + vy * std::sin(theta);
    const double t = -vu + std::sqrt(vu * vu + r * r - v2);
    return std::pow(t, -ps);
  };
  return smooth_integral(f, 0.0, two_pi, NonlocalAssembly::quad_tol) / ps;
}

NonlocalAssembly::NonlocalAssembly(GridPtr grid, const Exponents& e) : grid_(std::move(grid)), exps_(e) {
  if (!grid_) throw InvalidInput("assembly needs a grid");
  if (grid_->dim() != e.dim()) throw InvalidInput("assembly: grid and exponent dimensions differ");
  const int mx = grid_->nodes(0);
  const int my = grid_->dim() == 2 ? grid_->nodes(1) : 1;
  table_.assign(static_cast<std::size_t>(mx) * my, 0.0);
  const double near = near_cells * grid_->max_h() * (1.0 + 1e-12);
  const double order = e.kernel_order();
  for (int dj = 0; dj < my; ++dj) {
    for (int di = 0; di < mx; ++di) {
      if (di == 0 && dj == 0) continue;
      const double dist = std::hypot(di * grid_->h(0), grid_->dim() == 2 ? dj * grid_->h(1) : 0.0);
      table_[offset_index(di, dj)] =
          dist <= near ? near_pair_coefficient(*grid_, e, di, dj) : e.b() * std::pow(dist, -order);
    }
  }
  const double w2 = grid_->node_volume() * grid_->node_volume();
  pair_.resize(table_.size());
  for (std::size_t k = 0; k < table_.size(); ++k) pair_[k] = table_[k] * w2;
  exterior_ = mixp::exterior_weight(*grid_, e);
}

double NonlocalAssembly::pair_weight(std::size_t i, std::size_t j) const {
  const auto a = grid_->ij(i), b = grid_->ij(j);
  return pair_weight(a[0] - b[0], a[1] - b[1]);
}

}  // namespace mixp
