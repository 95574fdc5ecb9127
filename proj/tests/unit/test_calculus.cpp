#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mixp/calculus.hpp"
#include "mixp/error.hpp"

using namespace mixp;
using doctest::Approx;

namespace {
std::vector<double> v2(double a, double b) { return {a, b}; }
}

TEST_CASE("exponent validation") {
  CHECK_THROWS_AS(Exponents(1.0, 0.5, 1), InvalidInput);
  CHECK_THROWS_AS(Exponents(2.0, 1.0, 1), InvalidInput);
  CHECK_THROWS_AS(Exponents(2.0, 0.5, 3), InvalidInput);
  CHECK_THROWS_AS(Exponents(2.0, 0.5, 2, 1.0), InvalidInput);
  CHECK_THROWS_AS(Exponents(2.0, 0.5, 2, 2.0, 0.0), InvalidInput);
  CHECK(Exponents(2, 0.5, 1, 2, 1, 0.25).lambda() == 4.0);
}

TEST_CASE("lq norm values") {
  CHECK(lq_norm(v2(3, 4), 2) == Approx(5.0));
  CHECK(lq_norm(v2(1, 1), 3) == Approx(std::cbrt(2.0)).epsilon(1e-14));
  CHECK(lq_norm(v2(0, 0), 1.7) == 0.0);
  CHECK_THROWS_AS(lq_norm(v2(NAN, 1), 2), InvalidInput);
}

TEST_CASE("lq gradient values") {
  auto g = lq_grad(v2(3, 4), 2);
  CHECK(g[0] == Approx(0.6));
  CHECK(g[1] == Approx(0.8));
  g = lq_grad(v2(1, 1), 3);
  CHECK(g[0] == Approx(std::pow(2.0, -2.0 / 3.0)));
  CHECK(g[1] == Approx(std::pow(2.0, -2.0 / 3.0)));
  g = lq_grad(v2(-1, 0), 2);
  CHECK(g[0] == Approx(-1.0));
  CHECK(g[1] == 0.0);
  CHECK_THROWS_AS(lq_grad(v2(0, 0), 2), SingularPoint);
}

TEST_CASE("norm homogeneity and Euler identity on random vectors") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> qd(1.1, 4.0);
  for (int k = 0; k < 10000; ++k) {
    const double q = qd(rng), t = nd(rng) * 3;
    const auto z = v2(nd(rng), nd(rng));
    const auto tz = v2(t * z[0], t * z[1]);
    const double n = lq_norm(z, q);
    CHECK(std::abs(lq_norm(tz, q) - std::abs(t) * n) <= 1e-14 * std::abs(t) * n * 4);
    const auto g = lq_grad(z, q);
    CHECK(std::abs(g[0] * z[0] + g[1] * z[1] - n) <= 1e-12 * n);
  }
}

TEST_CASE("anisotropic flux") {
  const auto f = aniso_flux(v2(3, 4), Exponents(2, 0.5, 2, 2, 1, 1));
  CHECK(f[0] == Approx(3));
  CHECK(f[1] == Approx(4));
  const auto z = aniso_flux(v2(0, 0), Exponents(1.5, 0.5, 2, 1.5));
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
  // a H^{p-1} grad H evaluated by hand: H = 2^{1/3}, H^2 = 2^{2/3}, grad H = 2^{-2/3}
  const auto g = aniso_flux(v2(1, 1), Exponents(3, 0.5, 2, 3, 1, 1));
  CHECK(g[0] == Approx(1.0).epsilon(1e-14));
  CHECK(g[1] == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("structure constants") {
  auto c = h1_constants(Exponents(2.7, 0.5, 2, 2));
  CHECK(c.c1 == 1.0);
  CHECK(c.c2 == 1.0);
  c = h1_constants(Exponents(2, 0.5, 2, 3));
  CHECK(c.c1 == Approx(std::pow(2.0, -1.0 / 3.0)));
  CHECK(c.c2 <= 1.0 + 1e-15);
  const auto c1 = h1_constants(Exponents(3, 0.5, 2, 1.5, 1));
  const auto c2 = h1_constants(Exponents(3, 0.5, 2, 1.5, 2));
  CHECK(c2.c1 == Approx(2 * c1.c1));
  CHECK(c2.c2 == Approx(2 * c1.c2));

  // brute-force extrema over directions for q=3, p=2, N=2
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const Exponents e(2, 0.5, 2, 3);
  double lo = 1e300, hi = 0;
  for (int k = 0; k < 100000; ++k) {
    const auto z = v2(nd(rng), nd(rng));
    const auto b = aniso_flux(z, e);
    const double n = std::hypot(z[0], z[1]);
    lo = std::min(lo, (b[0] * z[0] + b[1] * z[1]) / (n * n));
    hi = std::max(hi, std::hypot(b[0], b[1]) / n);
  }
  CHECK(c.c1 <= lo * (1 + 1e-12));
  CHECK(c.c2 >= hi * (1 - 1e-12));
}

TEST_CASE("structure hypotheses over the exponent matrix") {
  for (double p : {1.5, 2.0, 3.0})
    for (double q : {1.5, 2.0, 3.0})
      for (int n : {1, 2}) {
        const auto r = check_structure_hypotheses(Exponents(p, 0.5, n, q), 100000, 17);
        CHECK(r.h1_violations == 0);
        if (p >= 2) CHECK(r.h2_violations == 0);
        CHECK(r.constants.c1 <= r.c1_observed * (1 + 1e-12));
        CHECK(r.constants.c2 >= r.c2_observed * (1 - 1e-12));
      }
}

TEST_CASE("fractional kernel") {
  const Exponents e(2, 0.5, 1);
  const std::vector<double> x{0.0}, y{1.0}, z{0.5};
  CHECK(frac_kernel(x, y, e) == Approx(1));
  CHECK(frac_kernel(x, z, e) == Approx(4));
  CHECK_THROWS_AS(frac_kernel(x, x, e), SingularPoint);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(-1, 1);
  const Exponents e2(2.5, 0.3, 2, 2, 1, 3);
  for (int k = 0; k < 1000; ++k) {
    const auto a = v2(ud(rng), ud(rng)), b = v2(ud(rng), ud(rng));
    const double kab = frac_kernel(a, b, e2);
    CHECK(kab == frac_kernel(b, a, e2));
    const double d = std::pow(std::hypot(a[0] - b[0], a[1] - b[1]), -e2.kernel_order());
    CHECK(kab <= e2.lambda() * d * (1 + 1e-14));
    CHECK(kab >= d / e2.lambda() * (1 - 1e-14));
  }
}

TEST_CASE("difference nonlinearity") {
  CHECK(diff_nonlinearity(5, 3, 2) == 2);
  CHECK(diff_nonlinearity(2, 0, 3) == Approx(4));
  CHECK(diff_nonlinearity(0, 2, 3) == Approx(-4));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> pd(1.1, 4);
  for (int k = 0; k < 5000; ++k) {
    const double a = nd(rng), b = nd(rng), c = nd(rng), p = pd(rng);
    CHECK(diff_nonlinearity(a, b, p) == -diff_nonlinearity(b, a, p));
    const double lo = std::min(a, c), hi = std::max(a, c);
    CHECK(diff_nonlinearity(lo, b, p) <= diff_nonlinearity(hi, b, p));
  }
}

TEST_CASE("truncation") {
  CHECK(truncate(0.5, 1) == 0.5);
  CHECK(truncate(2, 1) == 1);
  CHECK(truncate(-2, 1) == -1);
  CHECK_THROWS_AS(truncate(1, 0), InvalidInput);
}

TEST_CASE("critical exponents") {
  auto c = critical_exponents(Exponents(1.5, 0.5, 2));
  REQUIRE(c.p_star);
  CHECK(*c.p_star == Approx(6));
  CHECK(c.kappa == Approx(4));
  c = critical_exponents(Exponents(2, 0.5, 2));
  CHECK_FALSE(c.p_star);
  CHECK(c.kappa == 2);
  CHECK(conj(6) == Approx(1.2));
  CHECK_THROWS_AS(conj(1), InvalidInput);
}

TEST_CASE("integrability exponents") {
  const Exponents e(1.5, 0.5, 2);
  GammaInfo g;
  g.constant = false;
  g.min = 0.3;
  g.max = 0.9;
  g.strip_max = 0.9;
  CHECK(integrability_requirement(Regime::a, e, g).m == Approx(1.2));
  GammaInfo c;
  c.constant = true;
  c.min = c.max = c.strip_max = 0.5;
  CHECK(integrability_requirement(Regime::cthm1, e, c).m == Approx(12.0 / 11.0));
  GammaInfo d = g;
  d.strip_max = 1.8;
  d.max = 1.8;
  d.gamma_star = 2.0;
  CHECK(integrability_requirement(Regime::b_thm2, e, d).m == Approx(1.25));
  c.min = c.max = c.strip_max = 1;
  CHECK(integrability_requirement(Regime::cthm2, e, c).m == 1);
  c.min = c.max = c.strip_max = 2;
  CHECK(integrability_requirement(Regime::cthm3, e, c).m == 1);
  // inconsistent claims
  CHECK_THROWS_AS(integrability_requirement(Regime::cthm1, e, g), InvalidInput);
  CHECK_THROWS_AS(integrability_requirement(Regime::a, e, d), InvalidInput);
  CHECK(parse_regime("d") == Regime::b_thm2);
}

TEST_CASE("algebraic inequality sampling") {
  auto r = check_alg_inequality(2, 1000, 1);
  CHECK(r.violations == 0);
  CHECK(r.c_fit == Approx(1).epsilon(1e-12));
  for (double p : {1.3, 1.5, 3.0, 4.0}) {
    r = check_alg_inequality(p, 100000, 2);
    CHECK(r.violations == 0);
    CHECK(r.c_fit > 0);
  }
  const std::vector<double> a{1, 2};
  CHECK_FALSE(alg_ratio(a, a, 3));
}

TEST_CASE("increasing function inequality") {
  const PiecewiseLinear id({0, 1}, {0, 1});
  CHECK(id.primitive_root(0.7, 2) == Approx(0.7));
  CHECK(check_increasing_inequality(2, id, 10000, 4).violations == 0);
  const PiecewiseLinear ramp({-1, 0, 1}, {0, 0, 1});  // t^+
  for (double t : {-2.0, -0.5, 0.3, 1.7}) CHECK(ramp.primitive_root(t, 2) == Approx(std::max(t, 0.0)));
  CHECK(check_increasing_inequality(2, ramp, 10000, 4).violations == 0);
  const PiecewiseLinear flat({0}, {3});
  const auto r = check_increasing_inequality(2.5, flat, 1000, 4);
  CHECK(r.violations == 0);
  CHECK(r.max_defect <= 0);
  CHECK_THROWS_AS(PiecewiseLinear({0, 1}, {1, 0}), InvalidInput);
  for (double p : {1.5, 3.0}) {
    const PiecewiseLinear g({-2, -1, 0.5, 2}, {-3, -2.5, 0, 4});
    CHECK(check_increasing_inequality(p, g, 20000, 8).violations == 0);
  }
  // nearby points inside one segment are equality cases
  const PiecewiseLinear g({-2, -1, 0.5, 2}, {-3, -2.5, 0, 4});
  for (double p : {1.5, 2.0, 3.0}) {
    const auto r = check_increasing_inequality(p, g, 100000, 0);
    CHECK(r.violations == 0);
    CHECK(r.max_defect < 1e-14);
  }
}
