#include <doctest.h>

#include <random>
#include <sstream>

#include "mixp/error.hpp"
#include "mixp/grid.hpp"

using namespace mixp;
using doctest::Approx;

TEST_CASE("grid construction") {
  auto g = make_grid(1, {1, 1}, {3, 3}, 0.3);
  CHECK(g->size() == 3);
  CHECK(g->h(0) == 0.25);
  CHECK(g->point(0)[0] == 0.25);
  CHECK(g->point(1)[0] == 0.5);
  CHECK(g->point(2)[0] == 0.75);
  const auto mask = g->strip_mask();
  CHECK(mask == std::vector<bool>{true, false, true});
  CHECK(make_grid(2, {1, 1}, {3, 3}, 0.1)->size() == 9);
  CHECK_THROWS_AS(make_grid(1, {1, 1}, {2, 2}, 0.1), InvalidInput);
  CHECK_THROWS_AS(make_grid(1, {1, 1}, {5, 5}, 0.5), InvalidInput);
  CHECK_THROWS_AS(make_grid(2, {1, -1}, {5, 5}, 0.1), InvalidInput);
  CHECK_THROWS_AS(make_grid(3, {1, 1}, {5, 5}, 0.1), InvalidInput);
}

TEST_CASE("grid function algebra") {
  auto g = make_grid(1, {1, 1}, {4, 4}, 0.1);
  GridFunction u(g, std::vector<double>{-2, -1, 1, 2});
  GridFunction v(g, 0.5);
  CHECK((u + v)[0] == -1.5);
  CHECK((u - v)[3] == 1.5);
  CHECK((2.0 * u)[1] == -2);
  CHECK(u.pos()[0] == 0);
  CHECK(u.pos()[3] == 2);
  CHECK(u.neg()[0] == 2);
  CHECK(u.neg_part()[0] == -2);
  CHECK(u.neg_part()[3] == 0);
  CHECK(u.max(v)[0] == 0.5);
  CHECK(u.min(v)[3] == 0.5);
  CHECK(u.sup() == 2);
  CHECK(u.inf() == -2);
  CHECK(u.lp_norm(2) == Approx(std::sqrt(10 * 0.2)));
  CHECK_THROWS_AS(GridFunction(g, std::vector<double>{1, 2}), InvalidInput);
}

TEST_CASE("discrete gradient") {
  auto g = make_grid(1, {1, 1}, {3, 3}, 0.1);
  GridFunction u(g, std::vector<double>{0.25, 0.5, 0.75});
  auto cg = discrete_gradient(u);
  REQUIRE(cg.g.size() == 4);
  CHECK(cg.g[0][0] == Approx(1));
  CHECK(cg.g[1][0] == Approx(1));
  CHECK(cg.g[2][0] == Approx(1));
  CHECK(cg.g[3][0] == Approx(-3));
  for (const auto& x : discrete_gradient(GridFunction(g)).g) CHECK(x[0] == 0);

  auto g2 = make_grid(2, {1, 2}, {4, 5}, 0.1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  GridFunction a(g2), b(g2);
  for (std::size_t k = 0; k < g2->size(); ++k) {
    a[k] = nd(rng);
    b[k] = nd(rng);
  }
  const auto ga = discrete_gradient(a), gb = discrete_gradient(b), gab = discrete_gradient(2.0 * a + (-3.0) * b);
  REQUIRE(gab.g.size() == g2->cells() * 4);
  for (std::size_t s = 0; s < gab.g.size(); ++s)
    for (int c = 0; c < 2; ++c) CHECK(gab.g[s][c] == Approx(2 * ga.g[s][c] - 3 * gb.g[s][c]));
}

TEST_CASE("csv round trip") {
  auto g = make_grid(2, {1, 1.5}, {5, 4}, 0.1);
  GridFunction u(g);
  for (std::size_t k = 0; k < g->size(); ++k) u[k] = std::sin(1.0 + k) / 3.0;
  std::stringstream ss;
  write_csv(ss, u, {"seed 3"});
  const auto text = ss.str();
  CHECK(text.rfind("# seed 3\nx,y,u\n", 0) == 0);
  const auto v = read_csv(ss, g);
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(v[k] == u[k]);
  std::stringstream bad("x,y,u\n0.5,0.5\n");
  CHECK_THROWS_AS(read_csv(bad, g), IoError);
}
