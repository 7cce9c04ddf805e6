#include "khj/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace khj {

SolveResult compute_psi_minus(const ForcingModel& model, std::span<const double> b, int n, Window window,
                              std::int64_t burn_in, bool track_argmin) {
  if (burn_in < 1) throw std::invalid_argument("compute_psi_minus: burn_in must be >= 1");
  SolveOptions opts;
  opts.track_argmin = track_argmin;
  opts.record_from = window.lo;
  return backward_solve(GridFunction(model.dim(), n, 0.0), window.lo - burn_in, window.hi, model, b, opts);
}

SolveResult compute_psi_plus(const ForcingModel& model, std::span<const double> b, int n, Window window,
                             std::int64_t burn_in, bool track_argmax) {
  if (burn_in < 1) throw std::invalid_argument("compute_psi_plus: burn_in must be >= 1");
  SolveOptions opts;
  opts.track_argmin = track_argmax;
  opts.record_to = window.hi;
  return forward_solve(GridFunction(model.dim(), n, 0.0), window.lo, window.hi + burn_in, model, b, opts);
}

double snapshot_distance(const SolveResult& a, const SolveResult& b, Window window) {
  double d = 0.0;
  for (std::int64_t t = window.lo; t <= window.hi; ++t) d = std::max(d, star_seminorm(a.at(t) - b.at(t)));
  return d;
}

StationaryPair compute_stationary_pair(const ForcingModel& model, std::span<const double> b, int n,
                                       Window window, const StationaryOptions& opts) {
  if (window.hi < window.lo) throw std::invalid_argument("compute_stationary_pair: empty window");
  const std::int64_t len = std::max<std::int64_t>(window.length(), 1);
  std::int64_t burn = opts.burn_in > 0 ? opts.burn_in : 4 * len;
  const std::int64_t cap = opts.max_factor * len;

  SolveResult prev_minus = compute_psi_minus(model, b, n, window, burn, false);
  SolveResult prev_plus = compute_psi_plus(model, b, n, window, burn, false);
  while (true) {
    burn *= 2;
    const bool last_round_possible = burn >= cap;
    SolveResult minus = compute_psi_minus(model, b, n, window, burn, opts.track_maps);
    SolveResult plus = compute_psi_plus(model, b, n, window, burn, opts.track_maps);
    const double residual =
        std::max(snapshot_distance(prev_minus, minus, window), snapshot_distance(prev_plus, plus, window));
    if (residual < opts.tolerance || last_round_possible) {
      return StationaryPair{window, burn, residual, std::move(minus), std::move(plus)};
    }
    prev_minus = std::move(minus);
    prev_plus = std::move(plus);
  }
}

GridFunction q_function(const StationaryPair& pair, std::int64_t j) {
  return pair.psi_minus(j) - pair.psi_plus(j);
}

GlobalMinimizer global_minimizer(const StationaryPair& pair) {
  const Window w = pair.window;
  GlobalMinimizer gm;
  const GridFunction& first = pair.psi_minus(w.lo);
  const double h = first.h();
  const int dim = first.dim();
  gm.orbit.t0 = w.lo;
  for (std::int64_t t = w.lo; t <= w.hi; ++t) {
    const GridFunction q = q_function(pair, t);
    const std::size_t k = q.argmin();
    const double qmin = q[k];
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (i != k && q[i] - qmin <= 1e-12) {
        gm.degenerate = true;
        gm.degenerate_times.push_back(t);
        break;
      }
    }
    const GridIndex idx = q.unravel(k);
    const auto p = pair.backward.map_at(t).lifted(k);
    RealVec v(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      v[static_cast<std::size_t>(a)] = static_cast<double>(idx[static_cast<std::size_t>(a)] - p[static_cast<std::size_t>(a)]) * h;
    }
    gm.orbit.x.push_back(q.point(idx));
    gm.orbit.v.push_back(std::move(v));
  }
  return gm;
}

double q_difference(const SolveResult& result, const StationaryPair& pair, std::int64_t t,
                    const TorusPoint& y, std::int64_t s, const TorusPoint& y_prime) {
  const GridFunction& at_t = result.at(t);
  const GridFunction& at_s = result.at(s);
  const std::size_t kt = at_t.linear(at_t.nearest(y));
  const std::size_t ks = at_s.linear(at_s.nearest(y_prime));
  const double psi_n = at_t[kt] - at_s[ks] + result.offset_between(s, t);
  const double psi_p = pair.psi_plus(t)[kt] - pair.psi_plus(s)[ks] + pair.forward.offset_between(s, t);
  return psi_n - psi_p;
}

GuidingOrbit guiding_orbit(const SolveResult& result, const StationaryPair& pair) {
  const std::int64_t m = result.first_recorded();
  const std::int64_t n = result.last_recorded();
  if (!pair.forward.recorded(m) || !pair.forward.recorded(n)) {
    throw std::invalid_argument("guiding_orbit: psi^+ does not cover the solve window");
  }
  for (std::int64_t t = m + 1; t <= n; ++t) {
    if (!result.has_map(t)) throw std::invalid_argument("guiding_orbit: result needs argmin maps");
  }
  const GridFunction q = result.at(m) - pair.psi_plus(m);
  const TorusPoint z0 = q.point(q.argmin());
  GuidingOrbit g{forward_minimizer(pair.forward, z0, m, n), 0.0};
  for (std::int64_t t = m + 1; t <= n; ++t) {
    g.q_drift = std::max(g.q_drift, std::abs(q_difference(result, pair, t, g.orbit.x_at(t), m, z0)));
  }
  return g;
}

namespace {

template <class Fn>
void for_each_in_ball(const GridFunction& q, GridIndex x0, double radius_max, Fn&& fn) {
  const int n = q.n();
  const double h = q.h();
  const int reach = std::min(static_cast<int>(std::floor(radius_max * n + 1e-9)), n / 2);
  const int r1 = q.dim() == 2 ? reach : 0;
  for (int d0 = -reach; d0 <= reach; ++d0) {
    for (int d1 = -r1; d1 <= r1; ++d1) {
      if (d0 == 0 && d1 == 0) continue;
      const double dist2 = (static_cast<double>(d0) * d0 + static_cast<double>(d1) * d1) * h * h;
      if (dist2 > radius_max * radius_max * (1.0 + 1e-12)) continue;
      fn(q.at({x0[0] + d0, x0[1] + d1}), dist2);
    }
  }
}

}  // namespace

double nondegeneracy_estimate(const GridFunction& q, GridIndex x0, double radius_max) {
  return quadratic_pinching(q, x0, radius_max).a;
}

double nondegeneracy_estimate(const StationaryPair& pair, const Orbit& orbit, std::int64_t t,
                              double radius_max) {
  const GridFunction q = q_function(pair, t);
  return nondegeneracy_estimate(q, q.nearest(orbit.x_at(t)), radius_max);
}

PinchingFit quadratic_pinching(const GridFunction& q, GridIndex x0, double radius_max) {
  const double q0 = q.at(x0);
  PinchingFit fit{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool any = false;
  for_each_in_ball(q, x0, radius_max, [&](double value, double dist2) {
    const double ratio = (value - q0) / dist2;
    fit.a = std::min(fit.a, ratio);
    fit.K = std::max(fit.K, ratio);
    any = true;
  });
  if (!any) throw std::invalid_argument("quadratic_pinching: radius smaller than one grid cell");
  return fit;
}

}  // namespace khj
