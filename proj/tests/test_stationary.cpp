#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "khj/dynamics.hpp"
#include "khj/stationary.hpp"
#include "oracles.hpp"

using namespace khj;

namespace {

const std::vector<double> kNoDrift{0.0};

StationaryPair default_pair(int n, Window w) {
  return compute_stationary_pair(ForcingModel::default_1d(42), kNoDrift, n, w);
}

}  // namespace

TEST_CASE("zero forcing has flat stationary solutions") {
  const StationaryPair p = compute_stationary_pair(ForcingModel::zero(1), kNoDrift, 64, {0, 10});
  for (std::int64_t t = 0; t <= 10; ++t) {
    CHECK(sup_norm(p.psi_minus(t)) == 0.0);
    CHECK(sup_norm(p.psi_plus(t)) == 0.0);
  }
  const GlobalMinimizer g = global_minimizer(p);
  CHECK(g.degenerate);
  CHECK(!g.degenerate_times.empty());
}

TEST_CASE("stationary solutions converge under longer burn-in") {
  const auto m = ForcingModel::default_1d(42);
  const Window w{0, 10};
  const SolveResult a = compute_psi_minus(m, kNoDrift, 128, w, 10);
  const SolveResult b = compute_psi_minus(m, kNoDrift, 128, w, 20);
  const SolveResult c = compute_psi_minus(m, kNoDrift, 128, w, 40);
  CHECK(snapshot_distance(b, c, w) <= snapshot_distance(a, c, w) + 1e-15);
  const StationaryPair p = compute_stationary_pair(m, kNoDrift, 128, w);
  CHECK(p.residual <= 1e-9);
  CHECK(p.burn_in >= 40);
  CHECK_THROWS_AS(compute_psi_minus(m, kNoDrift, 128, w, 0), std::invalid_argument);
  CHECK_THROWS_AS(compute_stationary_pair(m, kNoDrift, 128, {5, 4}), std::invalid_argument);
}

TEST_CASE("psi minus is invariant under the backward step") {
  const auto m = ForcingModel::default_1d(42);
  const StationaryPair p = default_pair(256, {0, 12});
  for (std::int64_t t = 0; t < 12; ++t) {
    const GridFunction next = backward_step(p.psi_minus(t), t, m, kNoDrift).values;
    CHECK(star_seminorm(next - p.psi_minus(t + 1)) <= 1e-9);
    const GridFunction prev = forward_step(p.psi_plus(t + 1), t, m, kNoDrift).values;
    CHECK(star_seminorm(prev - p.psi_plus(t)) <= 1e-9);
  }
}

TEST_CASE("global minimizer of the default model") {
  const StationaryPair p = default_pair(256, {0, 20});
  const GlobalMinimizer g = global_minimizer(p);
  CHECK(!g.degenerate);
  REQUIRE(g.orbit.size() == 21);
  for (std::int64_t t = 0; t <= 20; ++t) {
    const GridFunction q = q_function(p, t);
    CHECK(torus_distance(g.orbit.x_at(t), q.point(q.argmin())) == 0.0);
  }
  // The minimizer of Q is also a backward minimizer of psi^-.
  const Orbit back = backtrack_minimizer(p.backward, g.orbit.x_at(20));
  for (std::int64_t t = 0; t <= 20; ++t) CHECK(torus_distance(back.x_at(t), g.orbit.x_at(t)) == 0.0);
}

TEST_CASE("guiding orbit keeps Q constant") {
  const auto m = ForcingModel::default_1d(42);
  const StationaryPair p = default_pair(256, {0, 30});
  rng::KeyedStream s(3, 3);
  for (int trial = 0; trial < 5; ++trial) {
    SolveOptions opts;
    opts.track_argmin = true;
    const GridFunction phi = oracle::random_grid(1, 256, s);
    const SolveResult r = backward_solve(phi, 0, 30, m, kNoDrift, opts);
    const GuidingOrbit g = guiding_orbit(r, p);
    CHECK(g.q_drift <= 1e-8);
    CHECK(g.orbit.size() == 31);
  }
  // Started from psi^- itself the guiding orbit is the global minimizer.
  SolveOptions opts;
  opts.track_argmin = true;
  const SolveResult r = backward_solve(p.psi_minus(0), 0, 30, m, kNoDrift, opts);
  const GuidingOrbit g = guiding_orbit(r, p);
  const GlobalMinimizer gm = global_minimizer(p);
  for (std::int64_t t = 0; t <= 30; ++t) CHECK(torus_distance(g.orbit.x_at(t), gm.orbit.x_at(t)) == 0.0);
  SolveOptions bare;
  CHECK_THROWS_AS(guiding_orbit(backward_solve(GridFunction(1, 256), 0, 30, m, kNoDrift, bare), p), std::invalid_argument);
}

TEST_CASE("nondegeneracy estimate") {
  const int n = 128;
  const double c = 2.5;
  const GridFunction q = GridFunction::sample(1, n, [&](const TorusPoint& x) {
    const double d = torus_distance(x, TorusPoint{0.25});
    return c * d * d;
  });
  const GridIndex x0{32, 0};
  CHECK(nondegeneracy_estimate(q, x0, 0.1) == doctest::Approx(c).epsilon(1e-12));
  const PinchingFit fit = quadratic_pinching(q, x0, 0.1);
  CHECK(fit.K == doctest::Approx(c).epsilon(1e-12));
  CHECK_THROWS_AS(quadratic_pinching(q, x0, 0.1 / n), std::invalid_argument);

  const StationaryPair p = default_pair(256, {0, 10});
  const GlobalMinimizer g = global_minimizer(p);
  double prev = -1.0;
  for (double r : {0.2, 0.1, 0.05, 0.02}) {
    const double a = nondegeneracy_estimate(p, g.orbit, 0, r);
    CHECK(a >= prev);
    prev = a;
  }
  CHECK(prev > 0.0);
}
