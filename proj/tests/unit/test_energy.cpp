#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <omp.h>

#include "mixp/energy.hpp"
#include "mixp/error.hpp"

using namespace mixp;
using doctest::Approx;

namespace {

GridFunction random_field(const GridPtr& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  GridFunction u(g);
  for (std::size_t k = 0; k < g->size(); ++k) u[k] = nd(rng);
  return u;
}

// Exterior weight of a box by polar collar quadrature to 10 diameters plus
// the analytic far field.
double collar_exterior_weight(const Grid& g, const Exponents& e, const Point& x) {
  using boost::math::quadrature::gauss_kronrod;
  const double ps = e.p() * e.s();
  const double r_inf = 10.0 * g.diameter();
  auto exit = [&](double th) {
    const double c = std::cos(th), s = std::sin(th);
    double t = 1e300;
    if (c > 1e-300) t = std::min(t, (g.extent(0) - x[0]) / c);
    if (c < -1e-300) t = std::min(t, -x[0] / c);
    if (s > 1e-300) t = std::min(t, (g.extent(1) - x[1]) / s);
    if (s < -1e-300) t = std::min(t, -x[1] / s);
    return t;
  };
  auto radial = [&](double th) {
    // r = exp(t): r^{-1-ps} dr = exp(-ps t) dt
    auto f = [&](double t) { return std::exp(-ps * t); };
    return gauss_kronrod<double, 61>::integrate(f, std::log(exit(th)), std::log(r_inf), 10, 1e-14);
  };
  std::vector<double> cuts;
  for (double cx : {0.0, g.extent(0)})
    for (double cy : {0.0, g.extent(1)}) {
      double a = std::atan2(cy - x[1], cx - x[0]);
      cuts.push_back(a < 0 ? a + 2 * std::numbers::pi : a);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(cuts.front() + 2 * std::numbers::pi);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    total += gauss_kronrod<double, 61>::integrate(radial, cuts[k], cuts[k + 1], 15, 1e-13);
  return e.b() * (total + 2 * std::numbers::pi * std::pow(r_inf, -ps) / ps);
}

// (h^2 d^p)^{-1} \iint_{cell_0 x cell_1} |x-y|^{p-1-ps} in 1D, by nested quadrature.
double near_coefficient_oracle_1d(double d, double h, const Exponents& e) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double alpha = e.p() - 1 - e.p() * e.s();
  auto outer = [&](double x) {
    auto inner = [&](double y) { return x == y ? 0.0 : std::pow(std::abs(x - y), alpha); };
    const double lo = d - h / 2, hi = d + h / 2;
    if (x > lo && x < hi) return ts.integrate(inner, lo, x) + ts.integrate(inner, x, hi);
    return ts.integrate(inner, lo, hi);
  };
  double v = 0;
  if (d - h / 2 < h / 2)
    v = ts.integrate(outer, -h / 2, d - h / 2) + ts.integrate(outer, d - h / 2, h / 2);
  else
    v = ts.integrate(outer, -h / 2, h / 2);
  return e.b() * v / (h * h) / std::pow(d, e.p());
}

double fd_check(const std::function<double(const GridFunction&)>& energy, const GridFunction& u,
                const GridFunction& grad) {
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) scale = std::max(scale, std::abs(grad[k]));
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double step = 1e-6 * std::max(1.0, std::abs(u[k]));
    GridFunction up = u, dn = u;
    up[k] += step;
    dn[k] -= step;
    const double fd = (energy(up) - energy(dn)) / (2 * step);
    worst = std::max(worst, std::abs(fd - grad[k]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("local energy hand case") {
  auto g = std::make_shared<const Grid>(1, std::array<double, 2>{1, 1}, std::array<int, 2>{1, 1});
  GridFunction u(g, 1.0);
  const auto eg = local_energy_grad(u, Exponents(2, 0.5, 1));
  CHECK(eg.energy == Approx(2));
  CHECK(eg.gradient[0] == Approx(4));  // 2u/h
  CHECK(w1p_norm(u, 2) == Approx(2));
  const auto z = local_energy_grad(GridFunction(g), Exponents(2, 0.5, 1));
  CHECK(z.energy == 0);
  CHECK(z.gradient[0] == 0);
}

TEST_CASE("local energy gradient matches finite differences") {
  for (int dim : {1, 2})
    for (double p : {1.5, 2.0, 3.0})
      for (double q : {1.5, 2.0, 3.0}) {
        if (dim == 1 && q != 2.0) continue;
        auto g = make_grid(dim, {1, 1.3}, {5, 5}, 0.1);
        const Exponents e(p, 0.5, dim, q, 1.7);
        const auto u = random_field(g, 21);
        const auto eg = local_energy_grad(u, e);
        CHECK(eg.energy > 0);
        const double err = fd_check([&](const GridFunction& v) { return local_energy_grad(v, e).energy; }, u, eg.gradient);
        CHECK(err <= 1e-6);
      }
}

TEST_CASE("exterior weights") {
  auto g = make_grid(1, {1, 1}, {3, 3}, 0.1);
  const Exponents e(2, 0.5, 1);
  CHECK(exterior_weight(*g, e, {0.5, 0}) == Approx(4).epsilon(1e-14));
  // 1D closed form against direct quadrature of the two half lines
  boost::math::quadrature::exp_sinh<double> es;
  for (double x : {0.1, 0.37, 0.5, 0.9}) {
    const Exponents e2(2.5, 0.3, 1, 2, 1, 1.5);
    const double ps = 0.75;
    const double lhs = 1.5 * es.integrate([&](double t) { return std::pow(x + t, -1 - ps); }) +
                       1.5 * es.integrate([&](double t) { return std::pow(1 - x + t, -1 - ps); });
    CHECK(exterior_weight(*g, e2, {x, 0}) == Approx(lhs).epsilon(1e-9));
  }
  NonlocalAssembly as(make_grid(1, {1, 1}, {9, 9}, 0.1), e);
  for (std::size_t k = 0; k < 9; ++k) CHECK(as.exterior_weight(k) == Approx(as.exterior_weight(8 - k)).epsilon(1e-14));
  for (std::size_t k = 0; k < 4; ++k) CHECK(as.exterior_weight(k) > as.exterior_weight(k + 1));

  auto g2 = make_grid(2, {1, 1.5}, {5, 5}, 0.1);
  for (const Exponents& e2 : {Exponents(2, 0.5, 2), Exponents(1.5, 0.3, 2, 2, 1, 2), Exponents(3, 0.8, 2)}) {
    for (const Point x : {Point{0.5, 0.75}, Point{0.1, 0.2}, Point{0.93, 1.4}}) {
      const double oracle = collar_exterior_weight(*g2, e2, x);
      CHECK(exterior_weight(*g2, e2, x) == Approx(oracle).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(exterior_weight(*g2, Exponents(2, 0.5, 2), Point{0.0, 0.5}), SingularPoint);
}

TEST_CASE("ball exterior integral") {
  // centered point: 2 pi r^{-ps} / ps
  const Exponents e(2, 0.4, 2);
  CHECK(ball_exterior_integral({0.3, 0.3}, {0.3, 0.3}, 0.5, e) ==
        Approx(2 * std::numbers::pi * std::pow(0.5, -0.8) / 0.8).epsilon(1e-12));
  const Exponents e1(2, 0.5, 1);
  CHECK(ball_exterior_integral({0.1, 0}, {0, 0}, 0.5, e1) == Approx(1 / 0.4 + 1 / 0.6).epsilon(1e-14));
  CHECK_THROWS_AS(ball_exterior_integral({1, 1}, {0, 0}, 0.5, e), InvalidInput);
}

TEST_CASE("near-diagonal kernel coefficients") {
  // p(1-s) = 1 in 1D and p(1-s) = 2 in 2D make the averaged integrand
  // constant, so the coefficient equals the midpoint kernel exactly.
  auto g1 = make_grid(1, {1, 1}, {9, 9}, 0.1);
  const Exponents e1(2, 0.5, 1, 2, 1, 1.5);
  for (int d = 1; d <= 3; ++d)
    CHECK(near_pair_coefficient(*g1, e1, d, 0) == Approx(1.5 * std::pow(d * 0.1, -2)).epsilon(1e-12));
  auto g2 = make_grid(2, {1, 1}, {9, 9}, 0.1);
  const Exponents e2(2.5, 0.2, 2);
  for (auto [di, dj] : {std::pair{1, 0}, {1, 1}, {0, 2}, {2, 1}})
    CHECK(near_pair_coefficient(*g2, e2, di, dj) ==
          Approx(std::pow(std::hypot(di * 0.1, dj * 0.1), -2.5)).epsilon(1e-9));
  // general exponents against nested quadrature
  for (const Exponents& e : {Exponents(2, 0.7, 1), Exponents(1.5, 0.9, 1), Exponents(3, 0.2, 1)})
    for (int d = 1; d <= 3; ++d)
      CHECK(near_pair_coefficient(*g1, e, d, 0) == Approx(near_coefficient_oracle_1d(d * 0.1, 0.1, e)).epsilon(1e-8));
  // finite for ps >= 1 where the plain cell average diverges
  const double k = near_pair_coefficient(*g2, Exponents(2, 0.9, 2), 1, 0);
  CHECK(std::isfinite(k));
  CHECK(k > 0);
  NonlocalAssembly as(g2, Exponents(2, 0.9, 2));
  CHECK(as.kernel(1, 2) == as.kernel(-1, -2));
  CHECK(as.pair_weight(std::size_t{3}, std::size_t{17}) == as.pair_weight(std::size_t{17}, std::size_t{3}));
}

TEST_CASE("nonlocal energy two-node toy") {
  auto g = std::make_shared<const Grid>(1, std::array<double, 2>{1, 1}, std::array<int, 2>{2, 2});
  const Exponents e(2.5, 0.4, 1, 2, 1, 1);
  NonlocalAssembly as(g, e);
  const double h = 1.0 / 3.0;
  const double k12 = near_coefficient_oracle_1d(h, h, e);
  auto w = [&](double x) { return (std::pow(x, -1.0) + std::pow(1 - x, -1.0)) / 1.0; };
  GridFunction u(g, std::vector<double>{0.7, -0.2});
  const double expect = (std::pow(0.9, 2.5) * k12 * h * h + std::pow(0.7, 2.5) * w(h) * h + std::pow(0.2, 2.5) * w(2 * h) * h) / 2.5;
  const auto eg = nonlocal_energy_grad(u, as);
  CHECK(eg.energy == Approx(expect).epsilon(1e-8));
  CHECK(fd_check([&](const GridFunction& v) { return nonlocal_energy_grad(v, as).energy; }, u, eg.gradient) <= 1e-6);
  const auto z = nonlocal_energy_grad(GridFunction(g), as);
  CHECK(z.energy == 0);
}

TEST_CASE("nonlocal gradient, symmetry, mirror invariance") {
  for (int dim : {1, 2})
    for (double p : {1.5, 2.0, 3.0})
      for (double s : {0.3, 0.7}) {
        auto g = make_grid(dim, {1, 1}, {dim == 1 ? 9 : 5, 5}, 0.1);
        const Exponents e(p, s, dim, 1.5, 1, 0.8);
        NonlocalAssembly as(g, e);
        const auto u = random_field(g, 7);
        const auto eg = nonlocal_energy_grad(u, as);
        auto f = [&](const GridFunction& v) { return nonlocal_energy_grad(v, as).energy + local_energy_grad(v, e).energy; };
        auto total = eg.gradient + local_energy_grad(u, e).gradient;
        CHECK(fd_check(f, u, total) <= 1e-6);
        // mirror relabeling
        GridFunction m(g);
        for (std::size_t k = 0; k < g->size(); ++k) {
          const auto [i, j] = g->ij(k);
          m[g->index(g->nodes(0) - 1 - i, j)] = u[k];
        }
        CHECK(nonlocal_energy_grad(m, as).energy == Approx(eg.energy).epsilon(1e-13));
        CHECK(local_energy_grad(m, e).energy == Approx(local_energy_grad(u, e).energy).epsilon(1e-13));
      }
  // p = 2: the gradient is a symmetric linear map
  auto g = make_grid(2, {1, 1}, {6, 5}, 0.1);
  NonlocalAssembly as(g, Exponents(2, 0.5, 2));
  const auto u = random_field(g, 1), v = random_field(g, 2);
  const auto lu = nonlocal_energy_grad(u, as).gradient, lv = nonlocal_energy_grad(v, as).gradient;
  double a = 0, b = 0, scale = 0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    a += lu[k] * v[k];
    b += u[k] * lv[k];
    scale += std::abs(lu[k] * v[k]);
  }
  CHECK(std::abs(a - b) <= 1e-12 * scale);
}

TEST_CASE("energies are bit-identical across thread counts") {
  auto g = make_grid(2, {1, 1}, {23, 23}, 0.1);
  const Exponents e(2.5, 0.5, 2, 1.5);
  NonlocalAssembly as(g, e);
  const auto u = random_field(g, 3);
  omp_set_num_threads(1);
  const auto a = nonlocal_energy_grad(u, as);
  omp_set_num_threads(4);
  const auto b = nonlocal_energy_grad(u, as);
  CHECK(a.energy == b.energy);
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(a.gradient[k] == b.gradient[k]);
}

TEST_CASE("seminorm and norms") {
  auto g = make_grid(1, {1, 1}, {15, 15}, 0.1);
  const auto u = random_field(g, 4);
  CHECK(gagliardo_seminorm(GridFunction(g), 0.5, 2.5) == 0);
  const double s1 = gagliardo_seminorm(u, 0.5, 2.5);
  CHECK(gagliardo_seminorm(-2.0 * u, 0.5, 2.5) == Approx(std::pow(2.0, 2.5) * s1).epsilon(1e-12));
  CHECK(w1p_norm(3.0 * u, 2.5) == Approx(3 * w1p_norm(u, 2.5)).epsilon(1e-13));
  const Exponents e(2.5, 0.5, 1);
  CHECK(tail(-3.0 * u, {0.5, 0}, 0.2, e) == Approx(3 * tail(u, {0.5, 0}, 0.2, e)).epsilon(1e-13));
  // seminorm / W^{1,p} ratio stays bounded over random fields
  auto g2 = make_grid(2, {1, 1}, {9, 9}, 0.1);
  NonlocalAssembly as(g2, Exponents(2, 0.5, 2));
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const auto v = random_field(g2, 100 + k);
    worst = std::max(worst, gagliardo_seminorm(v, as) / std::pow(w1p_norm(v, 2), 2));
  }
  MESSAGE("max seminorm ratio " << worst);
  CHECK(worst < 10);
}

TEST_CASE("tail values") {
  const Exponents e(2, 0.5, 1);
  auto g = make_grid(1, {1, 1}, {9, 9}, 0.1);
  CHECK(tail(GridFunction(g), {0.5, 0}, 0.25, e) == 0);
  GridFunction bump(g);
  bump[4] = 1;
  CHECK(tail(bump, {0.5, 0}, 0.25, e) == 0);
  double prev = 1;
  for (int m : {99, 399, 1599}) {
    auto gm = make_grid(1, {1, 1}, {m, m}, 0.1);
    const double err = std::abs(tail(GridFunction(gm, 1.0), {0.5, 0}, 0.25, e) - 0.25);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 2e-3);
  CHECK_THROWS_AS(tail(bump, {0.5, 0}, 0, e), InvalidInput);
}

TEST_CASE("ball statistics") {
  auto g = make_grid(2, {1, 1}, {9, 9}, 0.1);
  const BallStats c(GridFunction(g, 2.5), {0.5, 0.5}, 0.3);
  CHECK(c.sup() == 2.5);
  CHECK(c.inf() == 2.5);
  CHECK(c.lp_mean(1.7) == Approx(2.5));
  CHECK(c.measure_fraction(2.5) == 1);
  const auto u = random_field(g, 8).pow(1.0);
  const BallStats b(u, {0.4, 0.6}, 0.35);
  double prev = 2;
  for (double k = -1; k < 4; k += 0.05) {
    CHECK(b.measure_fraction(k) <= prev);
    prev = b.measure_fraction(k);
  }
  double pm = 0;
  for (double l : {0.25, 0.5, 1.0, 2.0, 3.5}) {
    double direct = 0;
    for (double v : b.values()) direct += std::pow(v, l);
    direct = std::pow(direct / b.count(), 1 / l);
    CHECK(b.lp_mean(l) == Approx(direct).epsilon(1e-13));
    CHECK(b.lp_mean(l) >= pm);
    pm = b.lp_mean(l);
  }
  const double k = b.level_for_fraction(0.3);
  CHECK(b.measure_fraction(k) >= 0.3);
  CHECK(b.measure_fraction(std::nextafter(k, 1e9)) < 0.3);
  CHECK_THROWS_AS(BallStats(u, {0.55, 0.55}, 0.01), InvalidInput);
}
