#pragma once

// Standard-family twist maps
//
//   Phi_j(x, v) = (x + v - grad F_j(x) mod 1,  v - grad F_j(x)),
//
// their symplectic Jacobian cocycle and QR-based Lyapunov exponents.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "khj/forcing.hpp"
#include "khj/grid.hpp"
#include "khj/orbit.hpp"

namespace khj {

struct PhasePoint {
  TorusPoint x;
  RealVec v;
};

PhasePoint twist_map(std::int64_t j, const PhasePoint& p, const ForcingModel& model);

/// Phi_j^{-1}: x = x' - v', v = v' + grad F_j(x).
PhasePoint inverse_twist_map(std::int64_t j, const PhasePoint& p, const ForcingModel& model);

/// D Phi_j at x: [[I - H, I], [-H, I]] with H the Hessian of F_j.
Eigen::MatrixXd twist_jacobian(std::int64_t j, const TorusPoint& x, const ForcingModel& model);

/// Iterates the twist maps from (x, v) at time t0 for `steps` steps.
Orbit iterate_orbit(std::int64_t t0, const PhasePoint& start, std::int64_t steps, const ForcingModel& model);

struct LyapunovResult {
  /// Ascending.
  std::vector<double> exponents;
  std::int64_t window = 0;
  /// Running averages after each step, each row ascending.
  std::vector<std::vector<double>> per_step_log;
};

struct LyapunovOptions {
  /// Initial orthonormal frame; identity when unset.
  std::optional<Eigen::MatrixXd> frame;
  /// Leading steps pushed through the cocycle but left out of the averages.
  std::int64_t transient = 0;
  bool keep_log = true;
};

/// Exponents of an arbitrary matrix cocycle: `cocycle(k)` is the matrix
/// applied at step k = 0 .. steps-1.
LyapunovResult cocycle_exponents(const std::function<Eigen::MatrixXd(std::int64_t)>& cocycle, int size,
                                 std::int64_t steps, const LyapunovOptions& opts = {});

/// Exponents of D Phi_j along the orbit positions x_j, j = t0 .. t1 - 1.
/// Rejects orbits shorter than 10 steps.
LyapunovResult lyapunov_exponents(const Orbit& orbit, const ForcingModel& model,
                                  const LyapunovOptions& opts = {});

/// max_j || (x_{j+1}, v_{j+1}) - Phi_j(x_j, v_j) ||_inf over the orbit, with
/// the position part measured on the torus. The first pair is skipped when
/// skip_first is set (free initial velocity).
double verify_minimizer_is_orbit(const Orbit& orbit, const ForcingModel& model, bool skip_first = false);

/// Random orthonormal frame of size `size` from a keyed stream.
Eigen::MatrixXd random_frame(int size, std::uint64_t seed);

}  // namespace khj
