#include <doctest.h>

#include <cmath>
#include <random>

#include "mixp/energy.hpp"
#include "mixp/error.hpp"
#include "mixp/solver.hpp"

using namespace mixp;
using doctest::Approx;

namespace {

GridFunction random_field(const GridPtr& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  GridFunction u(g);
  for (std::size_t k = 0; k < g->size(); ++k) u[k] = scale * nd(rng);
  return u;
}

Objective unit_source_local(const GridPtr& g) {
  return Objective(g, Exponents(2, 0.5, g->dim()), nullptr, SingularDensity::constant_source(*g, 1.0));
}

}  // namespace

TEST_CASE("zero source gives zero minimizer") {
  auto g = make_grid(1, {1, 1}, {15, 15}, 0.1);
  const Exponents e(2.5, 0.4, 1);
  auto as = std::make_shared<const NonlocalAssembly>(g, e);
  const Objective obj(g, e, as, SingularDensity::constant_source(*g, 0.0));
  const auto r = minimize(obj, random_field(g, 1));
  // the operator is (p-1)-homogeneous, so a residual of tol leaves u ~ tol^{1/(p-1)}
  CHECK(r.u.sup_abs() <= 10 * std::pow(1e-8, 1 / 1.5));
  CHECK(r.report.residual <= 1e-8);
}

TEST_CASE("pure local Poisson problem matches the parabola") {
  for (int m : {15, 31, 63}) {
    auto g = make_grid(1, {1, 1}, {m, m}, 0.1);
    const auto r = minimize(unit_source_local(g), GridFunction(g));
    double err = 0;
    for (std::size_t k = 0; k < g->size(); ++k) {
      const double x = g->point(k)[0];
      err = std::max(err, std::abs(r.u[k] - x * (1 - x) / 2));
    }
    // the three-point scheme is exact at the nodes for quadratics
    CHECK(err <= 1e-7);
    CHECK(r.u.sup() == Approx(0.125).epsilon(1e-3));
  }
}

TEST_CASE("minimizer does not depend on the start") {
  auto g = make_grid(2, {1, 1}, {9, 9}, 0.1);
  const Exponents e(3, 0.6, 2, 1.5);
  auto as = std::make_shared<const NonlocalAssembly>(g, e);
  auto dens = SingularDensity::constant_source(*g, 2.0);
  dens.gamma.assign(g->size(), 0.5);
  dens.shift = 0.25;
  const Objective obj(g, e, as, dens);
  SolveOptions opt;
  const auto a = minimize(obj, GridFunction(g), opt);
  const auto b = minimize(obj, random_field(g, 3, 2.0), opt);
  CHECK((a.u - b.u).sup_abs() <= 10 * opt.tol);
  // energy trace nonincreasing up to round-off
  for (const auto* r : {&a, &b}) {
    const auto& t = r->report.energy_trace;
    for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k] <= t[k - 1] + 1e-11 * std::abs(t[0]) + 1e-14);
  }
  CHECK(a.u.inf() >= 0);
}

TEST_CASE("residual of the zero field") {
  auto g = make_grid(1, {1, 1}, {7, 7}, 0.1);
  const Exponents e(2, 0.5, 1);
  auto as = std::make_shared<const NonlocalAssembly>(g, e);
  const Objective obj(g, e, as, SingularDensity::constant_source(*g, 1.0));
  const auto r = obj.residual(GridFunction(g));
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(r[k] == Approx(-g->node_volume()));
}

TEST_CASE("residual is locally Lipschitz") {
  auto g = make_grid(1, {1, 1}, {15, 15}, 0.1);
  const Exponents e(3, 0.5, 1);
  auto as = std::make_shared<const NonlocalAssembly>(g, e);
  auto dens = SingularDensity::constant_source(*g, 1.0);
  dens.gamma.assign(g->size(), 1.5);
  dens.shift = 0.5;
  const Objective obj(g, e, as, dens);
  const auto u = random_field(g, 4);
  const auto r0 = obj.residual(u);
  const auto dir = random_field(g, 5);
  double prev_ratio = -1;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const double change = (obj.residual(u + eps * dir) - r0).sup_abs();
    const double ratio = change / eps;
    CHECK(std::isfinite(ratio));
    if (prev_ratio > 0) CHECK(ratio <= 2 * prev_ratio + 1e-9);
    prev_ratio = ratio;
  }
}

TEST_CASE("objective is midpoint convex") {
  auto g = make_grid(2, {1, 1}, {6, 6}, 0.1);
  const Exponents e(1.5, 0.3, 2, 3);
  auto as = std::make_shared<const NonlocalAssembly>(g, e);
  auto dens = SingularDensity::constant_source(*g, 3.0);
  dens.gamma.assign(g->size(), 0.7);
  dens.shift = 0.1;
  const Objective obj(g, e, as, dens);
  for (int k = 0; k < 50; ++k) {
    const auto u = random_field(g, 10 + k), v = random_field(g, 100 + k);
    const double ju = obj.value(u), jv = obj.value(v), jm = obj.value(0.5 * (u + v));
    const double scale = std::abs(ju) + std::abs(jv);
    CHECK(jm <= 0.5 * (ju + jv) + 1e-12 * scale);
  }
}

TEST_CASE("singular density primitives") {
  SingularDensity d;
  d.f = {2.0};
  d.gamma = {1.0};
  d.shift = 0.5;
  CHECK(d.primitive(0, 1.0) == Approx(2 * std::log(3.0)));
  CHECK(d.g(0, -1.0) == Approx(4.0));
  CHECK(d.primitive(0, -1.0) == Approx(-4.0));
  d.gamma = {0.5};
  CHECK(d.primitive(0, 2.0) == Approx(2 * (std::sqrt(2.5) - std::sqrt(0.5)) / 0.5));
  d.gamma = {3.0};
  CHECK(d.primitive(0, 2.0) == Approx(2 * (std::pow(2.5, -2) - std::pow(0.5, -2)) / -2));
  // derivative of the primitive is the density
  for (double gam : {0.0, 0.3, 1.0, 2.5})
    for (double eps : {0.0, 0.01, 1.0}) {
      d.gamma = {gam};
      d.shift = eps;
      const double t = 0.7, h = 1e-6;
      CHECK((d.primitive(0, t + h) - d.primitive(0, t - h)) / (2 * h) == Approx(d.g(0, t)).epsilon(1e-7));
    }
  d.shift = 0.0;
  d.gamma = {0.5};
  CHECK(d.primitive(0, 0.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("manufactured source") {
  auto g = make_grid(1, {1, 1}, {31, 31}, 0.1);
  const Exponents e(2, 0.5, 1);
  auto as = std::make_shared<const NonlocalAssembly>(g, e);
  const Objective poisson(g, e, as, SingularDensity::constant_source(*g, 1.0));
  const auto target = minimize(poisson, GridFunction(g)).u;
  const std::vector<double> zero(g->size(), 0.0), one(g->size(), 1.0);
  // gamma = 0: the operator itself, here the unit source up to solver tolerance
  const auto f0 = manufactured_source(target, e, as, zero);
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(f0[k] == Approx(1.0).epsilon(1e-6));
  // p = q = 2, gamma = 1: doubling the target scales the source by 4
  const auto f1 = manufactured_source(target, e, as, one);
  const auto f2 = manufactured_source(2.0 * target, e, as, one);
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(f2[k] == Approx(4 * f1[k]).epsilon(1e-12));

  // round trip through the unshifted singular problem
  SingularDensity dens;
  dens.f.assign(f1.values().begin(), f1.values().end());
  dens.gamma = one;
  dens.shift = 0.0;
  const Objective sing(g, e, as, dens);
  const auto back = minimize(sing, GridFunction(g, 0.01));
  CHECK((back.u - target).sup_abs() <= 1e-6);

  GridFunction bad = target;
  bad[3] = 0;
  CHECK_THROWS_AS(manufactured_source(bad, e, as, one), InvalidInput);
  GridFunction dip = target;
  dip[10] = 0.5;  // local maximum makes the neighbours' operator value negative
  CHECK_THROWS_AS(manufactured_source(dip, e, as, one), InvalidInput);
}

TEST_CASE("iteration limit raises non-convergence") {
  auto g = make_grid(1, {1, 1}, {31, 31}, 0.1);
  SolveOptions opt;
  opt.max_iters = 2;
  try {
    minimize(unit_source_local(g), GridFunction(g), opt);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.residual_trace.size() == 3);
  }
}
