#pragma once

// Discrete Lax-Oleinik operators for the kicked Hamilton-Jacobi equation.
//
// One backward step from time j to j+1 is
//
//   K phi(y) = min_x [ (phi - F_j)(x) + 1/2 |y - x|^2 - b.(y - x) ],
//
// the minimum running over grid points x and all integer lifts. The forward
// step is the max-plus mirror
//
//   Kf phi(x) = F_j(x) + max_v [ phi(x + v) - 1/2 |v|^2 + b.v ].
//
// Both reduce to a min-plus convolution with a quadratic kernel, computed per
// axis by a lower envelope of parabolas on a replicated line.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "khj/forcing.hpp"
#include "khj/grid.hpp"
#include "khj/orbit.hpp"

namespace khj {

/// For every target grid point, the chosen source as a signed lifted grid
/// position per axis: position p stands for the point p*h on the universal
/// cover, i.e. grid index p mod n shifted by floor(p / n) periods.
class ArgminMap {
 public:
  ArgminMap() = default;
  ArgminMap(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  bool empty() const { return lifted_.empty(); }

  std::array<std::int64_t, 2> lifted(std::size_t k) const {
    const auto d = static_cast<std::size_t>(dim_);
    return {lifted_[k * d], dim_ == 2 ? lifted_[k * d + 1] : 0};
  }
  void set(std::size_t k, std::array<std::int64_t, 2> p) {
    const auto d = static_cast<std::size_t>(dim_);
    lifted_[k * d] = p[0];
    if (dim_ == 2) lifted_[k * d + 1] = p[1];
  }

  bool operator==(const ArgminMap&) const = default;

 private:
  int dim_ = 1;
  int n_ = 0;
  std::vector<std::int64_t> lifted_;
};

struct StepResult {
  GridFunction values;
  std::optional<ArgminMap> argmin;
};

/// Grid position of a lifted coordinate: p mod n.
inline int wrap_index(std::int64_t p, int n) {
  auto r = static_cast<int>(p % n);
  return r < 0 ? r + n : r;
}

/// Kinetic cost 1/2 v^2 - b v of a displacement of `steps` grid cells.
inline double kinetic_cost(std::int64_t steps, double h, double b) {
  const double v = static_cast<double>(steps) * h;
  return 0.5 * v * v - b * v;
}

/// A_{j,j+1}(x, y): min over lifts of 1/2|y+k-x|^2 - b.(y+k-x), minus F_j(x).
double one_step_action(const TorusPoint& x, const TorusPoint& y, std::int64_t j,
                       const ForcingModel& model, std::span<const double> b);

/// Replication needed so that every minimizing displacement lies within the
/// searched lifts: ceil(|b|_inf + sqrt(2 osc(g))) + 1.
int replication_for(const GridFunction& g, std::span<const double> b);

/// out(y) = min over lifted grid points x of g(x) + 1/2|y-x|^2 - b.(y-x),
/// lifts k in [-R, R] per axis. Ties go to the smallest lifted position
/// (lexicographic over axes, axis 0 most significant).
StepResult minplus_conv_quadratic(const GridFunction& g, std::span<const double> b, int R,
                                  bool track_argmin = true);

StepResult backward_step(const GridFunction& phi, std::int64_t j, const ForcingGrid& forcing,
                         std::span<const double> b, bool track_argmin = false);
StepResult backward_step(const GridFunction& phi, std::int64_t j, const ForcingModel& model,
                         std::span<const double> b, bool track_argmin = false);

/// The argmax map records the lifted target position x + v for each x.
StepResult forward_step(const GridFunction& phi, std::int64_t j, const ForcingGrid& forcing,
                        std::span<const double> b, bool track_argmax = false);
StepResult forward_step(const GridFunction& phi, std::int64_t j, const ForcingModel& model,
                        std::span<const double> b, bool track_argmax = false);

/// Direct O(n^2d) evaluation of the backward step from the action function
/// (no envelope). Reference route for consistency checks.
GridFunction backward_step_direct(const GridFunction& phi, std::int64_t j, const ForcingModel& model,
                                  std::span<const double> b);

enum class Direction { Backward, Forward };

struct SolveOptions {
  bool track_argmin = false;
  bool normalize = true;
  /// Backward: keep snapshots for t >= record_from. Forward: keep t <= record_to.
  std::optional<std::int64_t> record_from;
  std::optional<std::int64_t> record_to;
};

/// Snapshots of K_{m,t} phi (backward) or Kf_{t,n} phi (forward) over a
/// contiguous range of recorded times.
class SolveResult {
 public:
  SolveResult(Direction dir, std::int64_t m, std::int64_t n, std::int64_t first, std::int64_t last,
              ForcingModel model, RealVec b);

  Direction direction() const { return dir_; }
  std::int64_t begin_time() const { return m_; }
  std::int64_t end_time() const { return n_; }
  std::int64_t first_recorded() const { return first_; }
  std::int64_t last_recorded() const { return last_; }
  bool recorded(std::int64_t t) const { return t >= first_ && t <= last_; }

  const GridFunction& at(std::int64_t t) const;
  bool has_map(std::int64_t t) const;
  const ArgminMap& map_at(std::int64_t t) const;
  const RealVec& b() const { return b_; }
  const ForcingModel& model() const { return model_; }

  /// Constant subtracted when the snapshot at time t was produced (0 at the
  /// initial time).
  double normalization(std::int64_t t) const;
  std::span<const double> normalization_log() const { return log_; }

  /// Total constant removed between the snapshots at j and k: the
  /// unnormalized solution satisfies true(k) - true(j) = at(k) - at(j) + offset_between(j, k).
  double offset_between(std::int64_t j, std::int64_t k) const;

  /// Snapshot at t with the constants removed since `reference` added back.
  GridFunction unnormalized(std::int64_t t, std::int64_t reference) const;

  // Filled by the solvers.
  void store(std::int64_t t, GridFunction values, std::optional<ArgminMap> map);
  void log_constant(std::int64_t t, double c);

 private:
  std::size_t slot(std::int64_t t) const;

  Direction dir_;
  std::int64_t m_, n_, first_, last_;
  ForcingModel model_;
  RealVec b_;
  std::vector<GridFunction> snapshots_;
  std::vector<ArgminMap> maps_;
  std::vector<double> log_;
};

/// A single-step operator: used to substitute alternative operators in
/// consistency checks.
using StepOperator = std::function<StepResult(const GridFunction&, std::int64_t, const ForcingGrid&,
                                              std::span<const double>, bool)>;

/// Iterates backward_step from time m to n (m < n).
SolveResult backward_solve(const GridFunction& phi, std::int64_t m, std::int64_t n,
                           const ForcingModel& model, std::span<const double> b,
                           const SolveOptions& opts = {}, const StepOperator& step = {});

/// Iterates forward_step from time n down to m (m < n); phi lives at time n.
SolveResult forward_solve(const GridFunction& phi, std::int64_t m, std::int64_t n,
                          const ForcingModel& model, std::span<const double> b,
                          const SolveOptions& opts = {});

/// Follows the argmin maps of a backward solve from y at the last time down to
/// the first recorded time. y is snapped to the nearest grid point.
Orbit backtrack_minimizer(const SolveResult& result, const TorusPoint& y);

/// Follows the argmax maps of a forward solve from x at time `from` up to
/// time `to` (default: the whole recorded range).
Orbit forward_minimizer(const SolveResult& result, const TorusPoint& x);
Orbit forward_minimizer(const SolveResult& result, const TorusPoint& x, std::int64_t from,
                        std::int64_t to);

}  // namespace khj
