#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "khj/grid.hpp"

using namespace khj;

TEST_CASE("torus points are reduced into [0, 1)") {
  const TorusPoint p{1.25, -0.25};
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(0.75));
  CHECK(TorusPoint{-1e-20}[0] < 1.0);
  CHECK(TorusPoint{1.0}[0] == 0.0);
  CHECK_THROWS_AS(TorusPoint(RealVec{0.1, 0.2, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(TorusPoint(RealVec{}), std::invalid_argument);
  const double sh[] = {0.9};
  CHECK(TorusPoint{0.3}.shifted(sh)[0] == doctest::Approx(0.2));
}

TEST_CASE("star seminorm and oscillation") {
  CHECK(star_seminorm(GridFunction(1, 16, 3.7)) == 0.0);
  CHECK(oscillation(GridFunction(1, 16, 3.7)) == 0.0);
  const GridFunction steps(1, 4, {0.0, 1.0, 2.0, 3.0});
  CHECK(star_seminorm(steps) == 1.5);
  CHECK(oscillation(steps) == 3.0);
  const auto sine = GridFunction::sample(1, 256, [](const TorusPoint& x) { return std::sin(2 * M_PI * x[0]); });
  CHECK(std::abs(star_seminorm(sine) - 1.0) <= 1e-3);
  CHECK(std::abs(oscillation(sine) - 2.0) <= 1e-3);
  // Invariance under constants, within rounding.
  CHECK(std::abs(star_seminorm(sine + 123.456) - star_seminorm(sine)) <= 1e-12);
  CHECK(star_seminorm(sine - (sine + 2.0)) <= 1e-15);
}

TEST_CASE("min_lift picks the representative in (-1/2, 1/2]") {
  CHECK(min_lift(TorusPoint{0.1}, TorusPoint{0.2})[0] == doctest::Approx(0.1));
  CHECK(min_lift(TorusPoint{0.9}, TorusPoint{0.1})[0] == doctest::Approx(0.2));
  CHECK(min_lift(TorusPoint{0.0}, TorusPoint{0.5})[0] == 0.5);
  CHECK(min_lift(TorusPoint{0.5}, TorusPoint{0.0})[0] == 0.5);
  // Antisymmetric off the tie.
  for (double a : {0.05, 0.3, 0.77}) {
    for (double c : {0.11, 0.6, 0.95}) {
      CHECK(min_lift(TorusPoint{a}, TorusPoint{c})[0] == doctest::Approx(-min_lift(TorusPoint{c}, TorusPoint{a})[0]));
    }
  }
  const auto v = min_lift(TorusPoint{0.9, 0.2}, TorusPoint{0.1, 0.6});
  CHECK(v[0] == doctest::Approx(0.2));
  CHECK(v[1] == doctest::Approx(0.4));
  CHECK(torus_distance(TorusPoint{0.9, 0.2}, TorusPoint{0.1, 0.6}) == doctest::Approx(0.4));
  CHECK(torus_distance_l2(TorusPoint{0.9, 0.2}, TorusPoint{0.1, 0.6}) == doctest::Approx(std::sqrt(0.2)));
  CHECK_THROWS_AS(min_lift(TorusPoint{0.1}, TorusPoint{0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("grid indexing is row-major and periodic") {
  GridFunction f(2, 8);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k);
  CHECK(f.linear({2, 3}) == 19);
  CHECK(f.unravel(19) == GridIndex{2, 3});
  CHECK(f.at({-1, 9}) == f.at({7, 1}));
  CHECK(f.point(GridIndex{4, 2})[0] == 0.5);
  CHECK(f.point(GridIndex{4, 2})[1] == 0.25);
  CHECK(f.nearest(TorusPoint{0.99, 0.06}) == GridIndex{0, 0});
  CHECK(f.nearest(TorusPoint{0.49, 0.2}) == GridIndex{4, 2});
  CHECK(f.argmin() == 0);
  CHECK(f.max() == 63.0);
  CHECK(f.all_finite());
  f[5] = std::nan("");
  CHECK_FALSE(f.all_finite());
}

TEST_CASE("grid construction rejects bad shapes") {
  CHECK_THROWS_AS(GridFunction(3, 8), std::invalid_argument);
  CHECK_THROWS_AS(GridFunction(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(GridFunction(1, 4, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  GridFunction a(1, 8), b(1, 16);
  CHECK_THROWS_AS(a += b, std::invalid_argument);
}

TEST_CASE("argmin returns the first minimum") {
  const GridFunction f(1, 4, {2.0, 1.0, 1.0, 3.0});
  CHECK(f.argmin() == 1);
}

TEST_CASE("central differences") {
  const int n = 256;
  const double h = 1.0 / n;
  const auto s = GridFunction::sample(1, n, [](const TorusPoint& x) { return std::sin(2 * M_PI * x[0]); });
  CHECK(std::abs(fd_gradient(s, {0, 0})[0] - 2 * M_PI) <= 45.0 * h * h);
  const auto c = GridFunction::sample(1, n, [](const TorusPoint& x) { return std::cos(2 * M_PI * x[0]); });
  CHECK(std::abs(fd_gradient(c, {0, 0})[0]) <= 1e-12);
  CHECK(fd_gradient(GridFunction(2, 16, 4.0), {3, 5}) == RealVec{0.0, 0.0});
  const auto plane = GridFunction::sample(2, 64, [](const TorusPoint& x) {
    return std::sin(2 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
  });
  const RealVec g = fd_gradient(plane, {0, 0});
  CHECK(g[0] == doctest::Approx(2 * M_PI).epsilon(2e-3));
  CHECK(std::abs(g[1]) <= 1e-12);
}

TEST_CASE("semiconcavity modulus") {
  const auto f = GridFunction::sample(1, 512, [](const TorusPoint& x) { return -std::cos(2 * M_PI * x[0]); });
  CHECK(std::abs(semiconcavity_modulus(f) - 4 * M_PI * M_PI) <= 1e-2);
  CHECK(semiconcavity_modulus(GridFunction(1, 64, 2.0)) == 0.0);
  // Concave kinks only: bounded above by the smooth part, here <= pi^2.
  const auto kinked = GridFunction::sample(1, 512, [](const TorusPoint& x) { return -std::abs(std::sin(M_PI * x[0])); });
  CHECK(semiconcavity_modulus(kinked) <= M_PI * M_PI + 1e-6);
  // Brute-force second differences agree with the reported maximum.
  double brute = -1e300;
  for (int i = 0; i < 512; ++i) {
    brute = std::max(brute, (kinked.at({i + 1, 0}) - 2 * kinked.at({i, 0}) + kinked.at({i - 1, 0})) * 512.0 * 512.0);
  }
  CHECK(semiconcavity_modulus(kinked) == doctest::Approx(brute));
}
