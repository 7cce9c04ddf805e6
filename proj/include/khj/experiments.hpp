#pragma once

// Convergence-rate measurement, the consolidated property suite and grid
// refinement studies.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "khj/dynamics.hpp"
#include "khj/forcing.hpp"
#include "khj/grid.hpp"
#include "khj/lax.hpp"

namespace khj {

/// Worker count: `requested` if positive, else KICKED_HJ_THREADS if set and
/// positive, else the hardware concurrency (at least 1).
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

using ScalarField = std::function<double(const TorusPoint&)>;

/// Test initial conditions: [0] = 0, [1] = random trigonometric polynomial,
/// [2..] = random piecewise-linear (bilinear for d = 2) interpolants of knot
/// values. They are functions on the torus so that any grid can sample them.
std::vector<ScalarField> initial_conditions(int dim, int count, std::uint64_t seed);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least squares y = slope * x + intercept. Requires >= 2 points with
/// distinct x. r_squared is 1 when y is constant.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Flags attached to a convergence report.
inline constexpr const char* kInsufficientDecayWindow = "insufficient-decay-window";
inline constexpr const char* kNonExponential = "non-exponential";

struct ConvergenceReport {
  std::vector<std::int64_t> N_values;
  /// errors[s][i] = ||K_{-N_i,0} phi_s - psi_ref(., 0)||_*.
  std::vector<std::vector<double>> errors;
  std::vector<double> sup_errors;
  /// Per-N sup errors of the same experiment at n / 2 (empty if not run).
  std::vector<double> coarse_sup_errors;
  /// NaN when fewer than two points lie above the floor.
  double lambda_fit = 0.0;
  double r_squared = 0.0;
  std::array<std::int64_t, 2> fit_range{0, 0};
  std::size_t fit_points = 0;
  double floor_estimate = 0.0;
  /// R^2 of log(sup_error) against log(N) over the same range.
  double power_law_r_squared = 0.0;
  std::vector<double> per_phi_lambda;
  /// ||psi_ref(burn 2 max N) - psi_ref(burn 4 max N)||_* at time 0.
  double reference_residual = 0.0;
  LyapunovResult lyapunov;
  std::string config_digest;
  std::vector<std::string> flags;

  bool flagged(const std::string& flag) const;
  /// Exponential decay detected: positive rate, R^2 >= 0.95 and no flags.
  bool exponential() const;
};

struct ConvergenceOptions {
  int threads = 1;
  /// Estimate the discretization floor from a second run at n / 2.
  bool estimate_floor = true;
  /// Length of the global-minimizer window used for the Lyapunov exponents;
  /// 0 skips them.
  std::int64_t lyapunov_window = 2000;
  std::string config_digest;
};

ConvergenceReport convergence_rate(const ForcingModel& model, std::span<const double> b, int n,
                                   std::span<const std::int64_t> N_values, int num_initials,
                                   std::uint64_t seed, const ConvergenceOptions& opts = {});

struct SuiteRow {
  std::string property;
  int trials = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct SuiteOptions {
  /// Replaces the fast backward step in every row that exercises it.
  StepOperator step;
  int threads = 1;
};

/// Runs every property with `trials` random instances and returns one row per
/// property. Violations are measured so that 0 means the property holds
/// exactly; a row passes when max_violation <= tolerance.
std::vector<SuiteRow> invariant_suite(const ForcingModel& model, std::span<const double> b, int n,
                                      std::uint64_t seed, int trials, const SuiteOptions& opts = {});

struct RefinementRow {
  int n = 0;
  double sup_error = 0.0;
  double lambda_fit = 0.0;
  double r_squared = 0.0;
  /// ||psi_ref at this n - psi_ref at the previous n||_* on the coarser grid;
  /// NaN for the first row.
  double cauchy_difference = 0.0;
};

/// Convergence experiment with N_values = 4, 8, ..., N at every resolution.
/// Consecutive resolutions must divide each other.
std::vector<RefinementRow> refinement_study(const ForcingModel& model, std::span<const double> b,
                                            std::span<const int> n_values, std::int64_t N,
                                            std::uint64_t seed, int threads = 1);

}  // namespace khj
