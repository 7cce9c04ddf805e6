#include "khj/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "khj/rng.hpp"

namespace khj {

PhasePoint twist_map(std::int64_t j, const PhasePoint& p, const ForcingModel& model) {
  const RealVec grad = model.eval_gradF(j, p.x);
  RealVec v = p.v;
  for (std::size_t a = 0; a < v.size(); ++a) v[a] -= grad[a];
  return {p.x.shifted(v), v};
}

PhasePoint inverse_twist_map(std::int64_t j, const PhasePoint& p, const ForcingModel& model) {
  RealVec back = p.v;
  for (double& c : back) c = -c;
  const TorusPoint x = p.x.shifted(back);
  const RealVec grad = model.eval_gradF(j, x);
  RealVec v = p.v;
  for (std::size_t a = 0; a < v.size(); ++a) v[a] += grad[a];
  return {x, v};
}

Eigen::MatrixXd twist_jacobian(std::int64_t j, const TorusPoint& x, const ForcingModel& model) {
  const int d = x.dim();
  const RealVec hess = model.eval_hessF(j, x);
  Eigen::MatrixXd H(d, d);
  for (int a = 0; a < d; ++a) {
    for (int c = 0; c < d; ++c) H(a, c) = hess[static_cast<std::size_t>(a * d + c)];
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd J(2 * d, 2 * d);
  J.topLeftCorner(d, d) = I - H;
  J.topRightCorner(d, d) = I;
  J.bottomLeftCorner(d, d) = -H;
  J.bottomRightCorner(d, d) = I;
  return J;
}

Orbit iterate_orbit(std::int64_t t0, const PhasePoint& start, std::int64_t steps, const ForcingModel& model) {
  Orbit o;
  o.t0 = t0;
  PhasePoint p = start;
  o.x.push_back(p.x);
  o.v.push_back(p.v);
  for (std::int64_t k = 0; k < steps; ++k) {
    p = twist_map(t0 + k, p, model);
    o.x.push_back(p.x);
    o.v.push_back(p.v);
  }
  return o;
}

LyapunovResult cocycle_exponents(const std::function<Eigen::MatrixXd(std::int64_t)>& cocycle, int size,
                                 std::int64_t steps, const LyapunovOptions& opts) {
  if (steps <= opts.transient) throw std::invalid_argument("cocycle_exponents: no steps to average");
  Eigen::MatrixXd Q = opts.frame.value_or(Eigen::MatrixXd::Identity(size, size));
  if (Q.rows() != size || Q.cols() != size) throw std::invalid_argument("cocycle_exponents: frame size");
  std::vector<double> sums(static_cast<std::size_t>(size), 0.0);
  LyapunovResult res;
  res.window = steps - opts.transient;
  for (std::int64_t k = 0; k < steps; ++k) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(cocycle(k) * Q);
    Q = qr.householderQ() * Eigen::MatrixXd::Identity(size, size);
    const Eigen::MatrixXd& R = qr.matrixQR();
    for (int i = 0; i < size; ++i) {
      if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);
    }
    if (k < opts.transient) continue;
    for (int i = 0; i < size; ++i) sums[static_cast<std::size_t>(i)] += std::log(std::abs(R(i, i)));
    if (opts.keep_log) {
      const auto done = static_cast<double>(k - opts.transient + 1);
      std::vector<double> row(sums.size());
      for (std::size_t i = 0; i < row.size(); ++i) row[i] = sums[i] / done;
      std::sort(row.begin(), row.end());
      res.per_step_log.push_back(std::move(row));
    }
  }
  res.exponents = sums;
  for (double& e : res.exponents) e /= static_cast<double>(res.window);
  std::sort(res.exponents.begin(), res.exponents.end());
  return res;
}

LyapunovResult lyapunov_exponents(const Orbit& orbit, const ForcingModel& model, const LyapunovOptions& opts) {
  const auto steps = static_cast<std::int64_t>(orbit.size()) - 1;
  if (steps < 10) throw std::invalid_argument("lyapunov_exponents: orbit too short (< 10 steps)");
  const int size = 2 * model.dim();
  return cocycle_exponents(
      [&](std::int64_t k) { return twist_jacobian(orbit.t0 + k, orbit.x[static_cast<std::size_t>(k)], model); },
      size, steps, opts);
}

double verify_minimizer_is_orbit(const Orbit& orbit, const ForcingModel& model, bool skip_first) {
  double worst = 0.0;
  for (std::size_t s = skip_first ? 1 : 0; s + 1 < orbit.size(); ++s) {
    const std::int64_t j = orbit.t0 + static_cast<std::int64_t>(s);
    const PhasePoint next = twist_map(j, {orbit.x[s], orbit.v[s]}, model);
    worst = std::max(worst, torus_distance(next.x, orbit.x[s + 1]));
    for (std::size_t a = 0; a < next.v.size(); ++a) {
      worst = std::max(worst, std::abs(next.v[a] - orbit.v[s + 1][a]));
    }
  }
  return worst;
}

Eigen::MatrixXd random_frame(int size, std::uint64_t seed) {
  rng::KeyedStream s(seed, 0x6672616d65ULL);
  Eigen::MatrixXd A(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) A(i, j) = s.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(size, size);
}

}  // namespace khj
