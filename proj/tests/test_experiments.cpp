#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "khj/experiments.hpp"
#include "khj/stationary.hpp"

using namespace khj;

namespace {

std::map<std::string, SuiteRow> by_name(const std::vector<SuiteRow>& rows) {
  std::map<std::string, SuiteRow> out;
  for (const auto& r : rows) out[r.property] = r;
  return out;
}

}  // namespace

TEST_CASE("line fits") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{3, 5, 7, 9};
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.points == 4);
  const std::vector<double> flat{2, 2, 2, 2};
  CHECK(fit_line(x, flat).r_squared == 1.0);
  const std::vector<double> noisy{1, 3, 2, 4};
  CHECK(fit_line(x, noisy).r_squared < 1.0);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("initial conditions") {
  for (int dim : {1, 2}) {
    const auto a = initial_conditions(dim, 6, 42);
    const auto b = initial_conditions(dim, 6, 42);
    REQUIRE(a.size() == 6);
    const TorusPoint x = dim == 1 ? TorusPoint{0.37} : TorusPoint{0.37, 0.81};
    const TorusPoint near_one = dim == 1 ? TorusPoint{1.0 - 1e-10} : TorusPoint{1.0 - 1e-10, 1.0 - 1e-10};
    const TorusPoint origin = dim == 1 ? TorusPoint{0.0} : TorusPoint{0.0, 0.0};
    CHECK(a[0](x) == 0.0);
    for (std::size_t s = 0; s < a.size(); ++s) {
      CHECK(a[s](x) == b[s](x));
      CHECK(std::abs(a[s](near_one) - a[s](origin)) <= 1e-7);
    }
    CHECK(a[1](x) != a[2](x));
    CHECK(initial_conditions(dim, 6, 43)[3](x) != a[3](x));
  }
  CHECK_THROWS_AS(initial_conditions(3, 3, 1), std::invalid_argument);
}

TEST_CASE("starting from psi minus gives no error") {
  const auto m = ForcingModel::default_1d(42);
  const std::vector<double> b{0.0};
  const StationaryPair p = compute_stationary_pair(m, b, 256, {-16, 0});
  const SolveResult r = backward_solve(p.psi_minus(-16), -16, 0, m, b);
  CHECK(star_seminorm(r.at(0) - p.psi_minus(0)) <= 1e-10);
}

TEST_CASE("convergence report under zero forcing is not exponential") {
  const std::vector<double> b{0.0};
  const std::vector<std::int64_t> N{2, 4, 8, 16, 32, 64};
  ConvergenceOptions opts;
  opts.lyapunov_window = 0;
  const ConvergenceReport r = convergence_rate(ForcingModel::zero(1), b, 128, N, 3, 42, opts);
  CHECK(!r.exponential());
  CHECK(r.flagged(kNonExponential));
  REQUIRE(r.errors.size() == 3);
  for (std::size_t i = 0; i < N.size(); ++i) {
    CHECK(r.errors[0][i] == 0.0);
    for (const auto& e : r.errors) CHECK(e[i] <= r.sup_errors[i]);
  }
}

TEST_CASE("convergence report is deterministic across thread counts") {
  const auto m = ForcingModel::default_1d(42);
  const std::vector<double> b{0.0};
  const std::vector<std::int64_t> N{1, 2, 3, 4, 6};
  ConvergenceOptions one;
  one.lyapunov_window = 50;
  ConvergenceOptions four = one;
  four.threads = 4;
  const ConvergenceReport a = convergence_rate(m, b, 256, N, 4, 7, one);
  const ConvergenceReport c = convergence_rate(m, b, 256, N, 4, 7, four);
  CHECK(a.errors == c.errors);
  CHECK(a.sup_errors == c.sup_errors);
  CHECK(a.lyapunov.exponents == c.lyapunov.exponents);
  CHECK(a.sup_errors[0] > a.sup_errors[2]);
  CHECK(a.lyapunov.exponents.size() == 2);
  CHECK_THROWS_AS(convergence_rate(m, b, 256, N, 2, 7, one), std::invalid_argument);
  const std::vector<std::int64_t> bad{4, 2};
  CHECK_THROWS_AS(convergence_rate(m, b, 256, bad, 3, 7, one), std::invalid_argument);
}

TEST_CASE("property suite passes on the default model") {
  const std::vector<double> b{0.1};
  const auto rows = invariant_suite(ForcingModel::default_1d(42), b, 128, 1, 10);
  CHECK(rows.size() == 14);
  for (const auto& r : rows) {
    INFO(r.property << " violation " << r.max_violation);
    CHECK(r.pass);
  }
}

TEST_CASE("property suite under zero forcing") {
  const auto rows = by_name(invariant_suite(ForcingModel::zero(1), std::vector<double>{0.0}, 64, 2, 5));
  CHECK(rows.at("weak_contraction").pass);
  CHECK(rows.at("semigroup").pass);
  CHECK(rows.at("monotonicity").pass);
  CHECK(!rows.at("quadratic_pinching").pass);
}

TEST_CASE("property suite catches an operator without the kick") {
  SuiteOptions opts;
  opts.step = [](const GridFunction& phi, std::int64_t, const ForcingGrid&, std::span<const double> b, bool track) {
    return minplus_conv_quadratic(phi, b, replication_for(phi, b), track);
  };
  const auto rows = by_name(invariant_suite(ForcingModel::default_1d(42), std::vector<double>{0.0}, 64, 3, 5, opts));
  CHECK(!rows.at("oracle_equivalence").pass);
  CHECK(!rows.at("semigroup").pass);
  // Order properties do not see the kick.
  CHECK(rows.at("monotonicity").pass);
  CHECK_THROWS_AS(invariant_suite(ForcingModel::zero(1), std::vector<double>{0.0}, 64, 3, 0), std::invalid_argument);
}

TEST_CASE("refinement study") {
  const std::vector<int> ns{32, 64};
  const auto rows = refinement_study(ForcingModel::zero(1), std::vector<double>{0.0}, ns, 16, 5);
  REQUIRE(rows.size() == 2);
  CHECK(std::isnan(rows[0].cauchy_difference));
  CHECK(rows[1].cauchy_difference == 0.0);
  const auto forced = refinement_study(ForcingModel::default_1d(42), std::vector<double>{0.0}, ns, 16, 5);
  CHECK(forced[1].cauchy_difference < 0.05);
  const std::vector<int> bad{64, 96};
  CHECK_THROWS_AS(refinement_study(ForcingModel::zero(1), std::vector<double>{0.0}, bad, 16, 5), std::invalid_argument);
  CHECK_THROWS_AS(refinement_study(ForcingModel::zero(1), std::vector<double>{0.0}, ns, 8, 5), std::invalid_argument);
}
