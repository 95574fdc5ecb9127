#include "mixp/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixp/error.hpp"

namespace mixp {

namespace {

constexpr std::size_t chunk_rows = 16;

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

// |d|^p and |d|^{p-2} d for one difference.
struct PowerPair {
  double energy;
  double flux;
};

inline PowerPair power_terms(double d, double p, bool quadratic) {
  if (quadratic) return {d * d, d};
  const double t = std::abs(d);
  if (t == 0.0) return {0.0, 0.0};
  const double tp = std::pow(t, p - 1.0);
  return {tp * t, tp * sgn(d)};
}

}  // namespace

namespace detail {

double accumulate_local(const Grid& g, const Exponents& e, std::span<const double> u, std::span<double> grad) {
  const double p = e.p(), q = e.q(), a = e.a();
  const int mx = g.nodes(0);
  if (g.dim() == 1) {
    const double h = g.h(0);
    auto at = [&](int i) { return (i < 0 || i >= mx) ? 0.0 : u[static_cast<std::size_t>(i)]; };
    const bool quadratic = p == 2.0;
    double energy = 0.0;
    for (int c = 0; c <= mx; ++c) {
      const double gr = (at(c) - at(c - 1)) / h;
      const auto t = power_terms(gr, p, quadratic);
      energy += t.energy * h;
      const double flux = a * t.flux;  // weight h times d(gr)/du = 1/h
      if (c < mx) grad[c] += flux;
      if (c > 0) grad[c - 1] -= flux;
    }
    return a / p * energy;
  }

  const int my = g.nodes(1);
  const double hx = g.h(0), hy = g.h(1);
  const double w = g.cell_volume() / 4.0;
  const bool isotropic_quadratic = p == 2.0 && q == 2.0;
  auto at = [&](int i, int j) { return (i < 0 || i >= mx || j < 0 || j >= my) ? 0.0 : u[g.index(i, j)]; };
  auto add = [&](int i, int j, double v) {
    if (i >= 0 && i < mx && j >= 0 && j < my) grad[g.index(i, j)] += v;
  };
  double energy = 0.0;
  for (int cy = 0; cy <= my; ++cy) {
    for (int cx = 0; cx <= mx; ++cx) {
      const int i0 = cx - 1, j0 = cy - 1;
      const double u00 = at(i0, j0), u10 = at(i0 + 1, j0), u01 = at(i0, j0 + 1), u11 = at(i0 + 1, j0 + 1);
      const double dx[2] = {(u10 - u00) / hx, (u11 - u01) / hx};  // rows j0, j0+1
      const double dy[2] = {(u01 - u00) / hy, (u11 - u10) / hy};  // columns i0, i0+1
      double fx_row[2] = {0.0, 0.0}, fy_col[2] = {0.0, 0.0};
      // corner (col, row) uses dx[row] and dy[col]
      for (int col = 0; col < 2; ++col) {
        for (int row = 0; row < 2; ++row) {
          const double gx = dx[row], gy = dy[col];
          double hp, fx, fy;
          if (isotropic_quadratic) {
            hp = gx * gx + gy * gy;
            fx = gx;
            fy = gy;
          } else {
            const double m = std::max(std::abs(gx), std::abs(gy));
            if (m == 0.0) continue;
            const double tx = std::abs(gx) / m, ty = std::abs(gy) / m;
            const double sq = std::pow(tx, q) + std::pow(ty, q);
            const double hn = m * std::pow(sq, 1.0 / q);  // H(g)
            hp = std::pow(hn, p);
            // a H^{p-1} dH/dg_k = a H^{p-q} |g_k|^{q-1} sgn(g_k)
            const double scale = std::pow(hn, p - q);
            fx = scale * std::pow(std::abs(gx), q - 1.0) * sgn(gx);
            fy = scale * std::pow(std::abs(gy), q - 1.0) * sgn(gy);
          }
          energy += hp * w;
          fx_row[row] += fx;
          fy_col[col] += fy;
        }
      }
      const double sx = a * w / hx, sy = a * w / hy;
      add(i0 + 1, j0, sx * fx_row[0]);
      add(i0, j0, -sx * fx_row[0]);
      add(i0 + 1, j0 + 1, sx * fx_row[1]);
      add(i0, j0 + 1, -sx * fx_row[1]);
      add(i0, j0 + 1, sy * fy_col[0]);
      add(i0, j0, -sy * fy_col[0]);
      add(i0 + 1, j0 + 1, sy * fy_col[1]);
      add(i0 + 1, j0, -sy * fy_col[1]);
    }
  }
  return a / p * energy;
}

double accumulate_nonlocal(const NonlocalAssembly& as, std::span<const double> u, std::span<double> grad) {
  const Grid& g = as.grid();
  const double p = as.exponents().p();
  const bool quadratic = p == 2.0;
  const std::size_t n = g.size();
  const int mx = g.nodes(0);
  const int my = g.dim() == 2 ? g.nodes(1) : 1;
  const std::size_t chunks = (n + chunk_rows - 1) / chunk_rows;
  std::vector<double> chunk_energy(chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(chunks);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    auto& cg = chunk_grad[c];
    cg.assign(n, 0.0);
    double energy = 0.0;
    const std::size_t first = static_cast<std::size_t>(c) * chunk_rows;
    const std::size_t last = std::min(n, first + chunk_rows);
    for (std::size_t i = first; i < last; ++i) {
      const int ix = static_cast<int>(i % mx), iy = static_cast<int>(i / mx);
      const double ui = u[i];
      double gi = 0.0;
      for (int jy = iy; jy < my; ++jy) {
        const int oy = jy - iy;
        const int jx0 = (jy == iy) ? ix + 1 : 0;
        const std::size_t row = static_cast<std::size_t>(jy) * mx;
        for (int jx = jx0; jx < mx; ++jx) {
          const double kw = as.pair_weight(jx - ix, oy);
          const auto t = power_terms(ui - u[row + jx], p, quadratic);
          energy += t.energy * kw;
          const double f = t.flux * kw;
          gi += f;
          cg[row + jx] -= f;
        }
      }
      const double vol = g.node_volume() * as.exterior_weight(i);
      const auto t = power_terms(ui, p, quadratic);
      energy += t.energy * vol;
      gi += t.flux * vol;
      cg[i] += gi;
    }
    chunk_energy[c] = energy;
  }

  double energy = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    energy += chunk_energy[c];
    const auto& cg = chunk_grad[c];
    for (std::size_t k = 0; k < n; ++k) grad[k] += cg[k];
  }
  // pairs i<j counted once: (1/2p) sum_{i!=j} = (1/p) sum_{i<j}
  return energy / p;
}

}  // namespace detail

EnergyGrad local_energy_grad(const GridFunction& u, const Exponents& e) {
  if (u.grid().dim() != e.dim()) throw InvalidInput("local_energy_grad: dimension mismatch");
  EnergyGrad out{0.0, GridFunction(u.grid_ptr())};
  out.energy = detail::accumulate_local(u.grid(), e, u.values(), out.gradient.values());
  return out;
}

EnergyGrad nonlocal_energy_grad(const GridFunction& u, const NonlocalAssembly& assembly) {
  if (u.size() != assembly.grid().size()) throw InvalidInput("nonlocal_energy_grad: grid mismatch");
  EnergyGrad out{0.0, GridFunction(u.grid_ptr())};
  out.energy = detail::accumulate_nonlocal(assembly, u.values(), out.gradient.values());
  return out;
}

double gagliardo_seminorm(const GridFunction& u, const NonlocalAssembly& assembly) {
  const auto eg = nonlocal_energy_grad(u, assembly);
  return 2.0 * assembly.exponents().p() * eg.energy / assembly.exponents().b();
}

double gagliardo_seminorm(const GridFunction& u, double s, double p) {
  const NonlocalAssembly as(u.grid_ptr(), Exponents(p, s, u.grid().dim()));
  return gagliardo_seminorm(u, as);
}

double w1p_norm(const GridFunction& u, double p) {
  if (!(p > 1.0)) throw InvalidInput("w1p_norm: p must exceed 1");
  const auto cg = discrete_gradient(u);
  double s = 0.0;
  for (const auto& gr : cg.g) s += std::pow(std::hypot(gr[0], gr[1]), p);
  return std::pow(s * cg.sample_weight, 1.0 / p);
}

double local_w1p_norm(const GridFunction& u, double p, double inset) {
  const Grid& g = u.grid();
  const auto cg = discrete_gradient(u);
  double grad_part = 0.0;
  for (std::size_t s = 0; s < cg.g.size(); ++s) {
    if (g.dist_to_boundary(g.cell_center(cg.cell_of(s))) < inset) continue;
    grad_part += std::pow(std::hypot(cg.g[s][0], cg.g[s][1]), p);
  }
  double val_part = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.dist_to_boundary(k) >= inset) val_part += std::pow(std::abs(u[k]), p);
  return std::pow(val_part * g.node_volume(), 1.0 / p) + std::pow(grad_part * cg.sample_weight, 1.0 / p);
}

double distance(const Point& a, const Point& b, int dim) {
  return dim == 1 ? std::abs(a[0] - b[0]) : std::hypot(a[0] - b[0], a[1] - b[1]);
}

double tail(const GridFunction& u, const Point& x0, double r, const Exponents& e) {
  if (!(r > 0.0)) throw InvalidInput("tail: radius must be positive");
  const Grid& g = u.grid();
  const double p = e.p();
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = distance(g.point(k), x0, g.dim());
    if (d < r || u[k] == 0.0) continue;
    s += std::pow(std::abs(u[k]), p - 1.0) * std::pow(d, -e.kernel_order());
  }
  s *= g.node_volume();
  return std::pow(std::pow(r, p) * s, 1.0 / (p - 1.0));
}

std::vector<std::size_t> ball_nodes(const Grid& g, const Point& x0, double r) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (distance(g.point(k), x0, g.dim()) < r) out.push_back(k);
  return out;
}

BallStats::BallStats(const GridFunction& u, const Point& x0, double r) {
  for (std::size_t k : ball_nodes(u.grid(), x0, r)) values_.push_back(u[k]);
  if (values_.empty()) throw InvalidInput("ball_stats: ball contains no grid node");
  sup_ = *std::max_element(values_.begin(), values_.end());
  inf_ = *std::min_element(values_.begin(), values_.end());
}

double BallStats::lp_mean(double l) const {
  if (!(l > 0.0)) throw InvalidInput("lp_mean: exponent must be positive");
  double s = 0.0;
  for (double v : values_) s += std::pow(std::abs(v), l);
  return std::pow(s / static_cast<double>(values_.size()), 1.0 / l);
}

double BallStats::measure_fraction(double k) const {
  const auto hits = std::count_if(values_.begin(), values_.end(), [k](double v) { return v >= k; });
  return static_cast<double>(hits) / static_cast<double>(values_.size());
}

double BallStats::level_for_fraction(double tau) const {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("level_for_fraction: tau must lie in (0,1]");
  std::vector<double> sorted = values_;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto need = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(sorted.size()) - 1e-12));
  return sorted[std::max<std::size_t>(need, 1) - 1];
}

}  // namespace mixp
