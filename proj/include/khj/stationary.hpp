#pragma once

// Stationary solutions psi^- (pullback of the backward operator) and psi^+
// (pushforward of the forward operator), Q = psi^- - psi^+, the global
// minimizer and the guiding orbit.

#include <cstdint>
#include <span>
#include <vector>

#include "khj/forcing.hpp"
#include "khj/grid.hpp"
#include "khj/lax.hpp"
#include "khj/orbit.hpp"

namespace khj {

/// Closed integer time interval [lo, hi].
struct Window {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t length() const { return hi - lo; }
};

/// psi^-(., j) ~ K_{lo - burn_in, j} 0, normalized to min 0, recorded on the window.
SolveResult compute_psi_minus(const ForcingModel& model, std::span<const double> b, int n, Window window,
                              std::int64_t burn_in, bool track_argmin = false);

/// psi^+(., j) ~ Kf_{j, hi + burn_in} 0, normalized to min 0, recorded on the window.
SolveResult compute_psi_plus(const ForcingModel& model, std::span<const double> b, int n, Window window,
                             std::int64_t burn_in, bool track_argmax = false);

/// max over window times of ||a(t) - b(t)||_*.
double snapshot_distance(const SolveResult& a, const SolveResult& b, Window window);

struct StationaryOptions {
  /// 0 selects 4x the window length.
  std::int64_t burn_in = 0;
  /// Doubling stops once burn_in exceeds this multiple of the window length.
  std::int64_t max_factor = 64;
  double tolerance = 1e-9;
  bool track_maps = true;
};

struct StationaryPair {
  Window window;
  std::int64_t burn_in = 0;
  /// Star-seminorm change of psi^+- between burn_in / 2 and burn_in.
  double residual = 0.0;
  SolveResult backward;
  SolveResult forward;

  const GridFunction& psi_minus(std::int64_t t) const { return backward.at(t); }
  const GridFunction& psi_plus(std::int64_t t) const { return forward.at(t); }
};

/// Both stationary solutions on the window, doubling the burn-in until the
/// residual drops below the tolerance or the cap is reached.
StationaryPair compute_stationary_pair(const ForcingModel& model, std::span<const double> b, int n,
                                       Window window, const StationaryOptions& opts = {});

/// Q^inf(., j) = psi^-(., j) - psi^+(., j), up to an additive constant.
GridFunction q_function(const StationaryPair& pair, std::int64_t j);

struct GlobalMinimizer {
  Orbit orbit;
  /// Some time had a second grid point within 1e-12 of the minimum of Q.
  bool degenerate = false;
  std::vector<std::int64_t> degenerate_times;
};

/// x_j = argmin Q^inf(., j); v_j is the displacement of the last backward step
/// of psi^- arriving at x_j.
GlobalMinimizer global_minimizer(const StationaryPair& pair);

struct GuidingOrbit {
  Orbit orbit;
  /// max_j |Q^N(z_j, j) - Q^N(z_m, m)| with normalization constants restored.
  double q_drift = 0.0;
};

/// z_m = argmin Q^N(., m) with Q^N = psi^N - psi^+ and psi^N the backward solve
/// `result` started at m; followed forward along the argmax maps of psi^+.
GuidingOrbit guiding_orbit(const SolveResult& result, const StationaryPair& pair);

/// Q^N(y, t) - Q^N(y', s) with constants restored, for psi^N = `result`.
double q_difference(const SolveResult& result, const StationaryPair& pair, std::int64_t t,
                    const TorusPoint& y, std::int64_t s, const TorusPoint& y_prime);

/// min over grid x with 0 < |x - x0| <= radius_max of (q(x) - q(x0)) / |x - x0|^2.
double nondegeneracy_estimate(const GridFunction& q, GridIndex x0, double radius_max);
double nondegeneracy_estimate(const StationaryPair& pair, const Orbit& orbit, std::int64_t t,
                              double radius_max);

/// Smallest and largest ratio (q(x) - q(x0)) / |x - x0|^2 over the ball.
struct PinchingFit {
  double a = 0.0;
  double K = 0.0;
};
PinchingFit quadratic_pinching(const GridFunction& q, GridIndex x0, double radius_max);

}  // namespace khj
