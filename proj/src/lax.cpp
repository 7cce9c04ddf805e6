#include "khj/lax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace khj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct EnvelopeWork {
  std::vector<std::int64_t> pos;
  std::vector<double> big_g;
  std::vector<double> z;
};

// One axis of the min-plus convolution. For y = 0..n-1 computes
//   out[y] = min_{p in [-R n, (R+1) n)} g[p mod n] + kinetic_cost(y - p)
// with the lower envelope of the parabolas
//   f_p(y) = 1/2 y^2 - y (x_p + b) + g_p + 1/2 x_p^2 + b x_p,   x_p = p h.
// The envelope only selects the candidate; the reported value is always
// evaluated with the same expression a direct search would use, and the
// neighbouring envelope pieces are re-checked so that near-ties resolve to
// the smallest lifted position.
void envelope_line(const double* g, std::ptrdiff_t g_stride, int n, double b, int R, double* out,
                   std::ptrdiff_t out_stride, std::int64_t* arg, std::ptrdiff_t arg_stride,
                   EnvelopeWork& w) {
  const double h = 1.0 / n;
  const std::int64_t lo = -static_cast<std::int64_t>(R) * n;
  const std::int64_t hi = static_cast<std::int64_t>(R + 1) * n;
  const auto count = static_cast<std::size_t>(hi - lo);
  w.pos.resize(count);
  w.big_g.resize(count);
  w.z.resize(count + 1);

  auto g_at = [&](std::int64_t p) { return g[wrap_index(p, n) * g_stride]; };
  auto big_g = [&](std::int64_t p) {
    const double x = static_cast<double>(p) * h;
    return g_at(p) + 0.5 * x * x + b * x;
  };

  std::size_t k = 0;
  w.pos[0] = lo;
  w.big_g[0] = big_g(lo);
  w.z[0] = -kInf;
  w.z[1] = kInf;
  for (std::int64_t p = lo + 1; p < hi; ++p) {
    const double gp = big_g(p);
    double s = (gp - w.big_g[k]) / (static_cast<double>(p - w.pos[k]) * h);
    while (s <= w.z[k]) {
      --k;
      s = (gp - w.big_g[k]) / (static_cast<double>(p - w.pos[k]) * h);
    }
    ++k;
    w.pos[k] = p;
    w.big_g[k] = gp;
    w.z[k] = s;
    w.z[k + 1] = kInf;
  }
  const std::size_t last = k;

  k = 0;
  for (int y = 0; y < n; ++y) {
    const double yy = y * h;
    while (k < last && w.z[k + 1] < yy) ++k;
    double best = kInf;
    std::int64_t best_p = 0;
    const std::size_t from = k == 0 ? 0 : k - 1;
    const std::size_t to = std::min(last, k + 1);
    for (std::size_t c = from; c <= to; ++c) {
      const std::int64_t p = w.pos[c];
      const double val = g_at(p) + kinetic_cost(y - p, h, b);
      if (val < best || (val == best && p < best_p)) {
        best = val;
        best_p = p;
      }
    }
    out[y * out_stride] = best;
    arg[y * arg_stride] = best_p;
  }
}

double b_inf(std::span<const double> b) {
  double m = 0.0;
  for (double c : b) m = std::max(m, std::abs(c));
  return m;
}

void check_b(const GridFunction& g, std::span<const double> b) {
  if (static_cast<int>(b.size()) != g.dim()) {
    throw std::invalid_argument("b must have one component per dimension");
  }
}

// min over integer lifts of the kinetic cost of a displacement of `steps` cells.
double lifted_kinetic_min(std::int64_t steps, int n, double b, int lifts) {
  const double h = 1.0 / n;
  double best = kInf;
  for (int k = -lifts; k <= lifts; ++k) best = std::min(best, kinetic_cost(steps + static_cast<std::int64_t>(k) * n, h, b));
  return best;
}

}  // namespace

ArgminMap::ArgminMap(int dim, int n)
    : dim_(dim), n_(n),
      lifted_(static_cast<std::size_t>(dim) * (dim == 1 ? static_cast<std::size_t>(n)
                                                        : static_cast<std::size_t>(n) * n)) {}

double one_step_action(const TorusPoint& x, const TorusPoint& y, std::int64_t j,
                       const ForcingModel& model, std::span<const double> b) {
  if (x.dim() != y.dim() || static_cast<int>(b.size()) != x.dim()) {
    throw std::invalid_argument("one_step_action: dimension mismatch");
  }
  const int lifts = static_cast<int>(std::ceil(b_inf(b))) + 2;
  double kinetic = 0.0;
  for (int a = 0; a < x.dim(); ++a) {
    const double d = y[a] - x[a];
    const double ba = b[static_cast<std::size_t>(a)];
    double best = kInf;
    for (int k = -lifts; k <= lifts; ++k) {
      const double v = d + k;
      best = std::min(best, 0.5 * v * v - ba * v);
    }
    kinetic += best;
  }
  return kinetic - model.eval_F(j, x);
}

int replication_for(const GridFunction& g, std::span<const double> b) {
  return static_cast<int>(std::ceil(b_inf(b) + std::sqrt(2.0 * oscillation(g)))) + 1;
}

StepResult minplus_conv_quadratic(const GridFunction& g, std::span<const double> b, int R,
                                  bool track_argmin) {
  if (R < 1) throw std::invalid_argument("minplus_conv_quadratic: replication must be >= 1");
  check_b(g, b);
  const int n = g.n();
  EnvelopeWork work;
  StepResult res{GridFunction(g.dim(), n), std::nullopt};
  ArgminMap map(g.dim(), n);

  if (g.dim() == 1) {
    std::vector<std::int64_t> arg(static_cast<std::size_t>(n));
    envelope_line(g.values().data(), 1, n, b[0], R, res.values.values().data(), 1, arg.data(), 1, work);
    if (track_argmin) {
      for (std::size_t k = 0; k < arg.size(); ++k) map.set(k, {arg[k], 0});
    }
  } else {
    // Axis 1 (contiguous) first, then axis 0: ties resolve lexicographically
    // with axis 0 most significant.
    const auto nn = static_cast<std::size_t>(n) * n;
    std::vector<double> rows(nn);
    std::vector<std::int64_t> arg1(nn), arg0(nn);
    for (int i0 = 0; i0 < n; ++i0) {
      const std::size_t off = static_cast<std::size_t>(i0) * n;
      envelope_line(g.values().data() + off, 1, n, b[1], R, rows.data() + off, 1, arg1.data() + off, 1, work);
    }
    for (int i1 = 0; i1 < n; ++i1) {
      envelope_line(rows.data() + i1, n, n, b[0], R, res.values.values().data() + i1, n, arg0.data() + i1, n, work);
    }
    if (track_argmin) {
      for (std::size_t k = 0; k < nn; ++k) {
        const std::int64_t p0 = arg0[k];
        const std::size_t y1 = k % static_cast<std::size_t>(n);
        const std::size_t row = static_cast<std::size_t>(wrap_index(p0, n)) * n;
        map.set(k, {p0, arg1[row + y1]});
      }
    }
  }
  if (track_argmin) res.argmin = std::move(map);
  return res;
}

StepResult backward_step(const GridFunction& phi, std::int64_t j, const ForcingGrid& forcing,
                         std::span<const double> b, bool track_argmin) {
  GridFunction g = phi - forcing.F(j);
  const int R = replication_for(g, b);
  return minplus_conv_quadratic(g, b, R, track_argmin);
}

StepResult backward_step(const GridFunction& phi, std::int64_t j, const ForcingModel& model,
                         std::span<const double> b, bool track_argmin) {
  return backward_step(phi, j, ForcingGrid(model, phi.n()), b, track_argmin);
}

StepResult forward_step(const GridFunction& phi, std::int64_t j, const ForcingGrid& forcing,
                        std::span<const double> b, bool track_argmax) {
  // max_v [phi(x+v) - 1/2 v^2 + b.v] = -min_x' [-phi(x') + 1/2|x - x'|^2 + b.(x - x')]
  RealVec nb(b.begin(), b.end());
  for (double& c : nb) c = -c;
  const GridFunction neg = -phi;
  const int R = replication_for(neg, nb);
  StepResult res = minplus_conv_quadratic(neg, nb, R, track_argmax);
  const GridFunction f = forcing.F(j);
  auto out = res.values.values();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f[k] - out[k];
  return res;
}

StepResult forward_step(const GridFunction& phi, std::int64_t j, const ForcingModel& model,
                        std::span<const double> b, bool track_argmax) {
  return forward_step(phi, j, ForcingGrid(model, phi.n()), b, track_argmax);
}

GridFunction backward_step_direct(const GridFunction& phi, std::int64_t j, const ForcingModel& model,
                                  std::span<const double> b) {
  check_b(phi, b);
  const int n = phi.n();
  const int lifts = static_cast<int>(std::ceil(b_inf(b))) + 2;
  // kin[a][steps + n - 1] = min over lifts of the per-axis kinetic cost.
  std::vector<std::vector<double>> kin(static_cast<std::size_t>(phi.dim()));
  for (int a = 0; a < phi.dim(); ++a) {
    auto& t = kin[static_cast<std::size_t>(a)];
    t.resize(static_cast<std::size_t>(2 * n - 1));
    for (int s = -(n - 1); s <= n - 1; ++s) {
      t[static_cast<std::size_t>(s + n - 1)] = lifted_kinetic_min(s, n, b[static_cast<std::size_t>(a)], lifts);
    }
  }
  const GridFunction g = phi - grid_F(model, j, n);
  GridFunction out(phi.dim(), n, kInf);
  if (phi.dim() == 1) {
    const auto& k0 = kin[0];
    for (int y = 0; y < n; ++y) {
      double best = kInf;
      for (int x = 0; x < n; ++x) best = std::min(best, g[static_cast<std::size_t>(x)] + k0[static_cast<std::size_t>(y - x + n - 1)]);
      out[static_cast<std::size_t>(y)] = best;
    }
  } else {
    const auto& k0 = kin[0];
    const auto& k1 = kin[1];
    for (int y0 = 0; y0 < n; ++y0) {
      for (int y1 = 0; y1 < n; ++y1) {
        double best = kInf;
        for (int x0 = 0; x0 < n; ++x0) {
          const double c0 = k0[static_cast<std::size_t>(y0 - x0 + n - 1)];
          for (int x1 = 0; x1 < n; ++x1) {
            const double v = (g.at({x0, x1}) + k1[static_cast<std::size_t>(y1 - x1 + n - 1)]) + c0;
            best = std::min(best, v);
          }
        }
        out[out.linear({y0, y1})] = best;
      }
    }
  }
  return out;
}

SolveResult::SolveResult(Direction dir, std::int64_t m, std::int64_t n, std::int64_t first,
                         std::int64_t last, ForcingModel model, RealVec b)
    : dir_(dir), m_(m), n_(n), first_(first), last_(last), model_(std::move(model)), b_(std::move(b)),
      snapshots_(static_cast<std::size_t>(last - first + 1)),
      maps_(static_cast<std::size_t>(last - first + 1)),
      log_(static_cast<std::size_t>(n - m + 1), 0.0) {}

std::size_t SolveResult::slot(std::int64_t t) const {
  if (!recorded(t)) throw std::out_of_range("SolveResult: time not recorded");
  return static_cast<std::size_t>(t - first_);
}

const GridFunction& SolveResult::at(std::int64_t t) const { return snapshots_[slot(t)]; }

bool SolveResult::has_map(std::int64_t t) const { return recorded(t) && !maps_[slot(t)].empty(); }

const ArgminMap& SolveResult::map_at(std::int64_t t) const {
  if (!has_map(t)) throw std::out_of_range("SolveResult: no argmin map at requested time");
  return maps_[slot(t)];
}

double SolveResult::normalization(std::int64_t t) const {
  if (t < m_ || t > n_) throw std::out_of_range("SolveResult: time outside solve");
  return log_[static_cast<std::size_t>(t - m_)];
}

double SolveResult::offset_between(std::int64_t j, std::int64_t k) const {
  if (j == k) return 0.0;
  const double sign = j < k ? 1.0 : -1.0;
  const std::int64_t lo = std::min(j, k), hi = std::max(j, k);
  double s = 0.0;
  if (dir_ == Direction::Backward) {
    for (std::int64_t t = lo + 1; t <= hi; ++t) s += normalization(t);
    return sign * s;
  }
  for (std::int64_t t = lo; t < hi; ++t) s += normalization(t);
  return -sign * s;
}

GridFunction SolveResult::unnormalized(std::int64_t t, std::int64_t reference) const {
  return at(t) + offset_between(reference, t);
}

void SolveResult::store(std::int64_t t, GridFunction values, std::optional<ArgminMap> map) {
  const std::size_t s = slot(t);
  snapshots_[s] = std::move(values);
  if (map) maps_[s] = std::move(*map);
}

void SolveResult::log_constant(std::int64_t t, double c) {
  log_[static_cast<std::size_t>(t - m_)] = c;
}

SolveResult backward_solve(const GridFunction& phi, std::int64_t m, std::int64_t n,
                           const ForcingModel& model, std::span<const double> b,
                           const SolveOptions& opts, const StepOperator& step) {
  if (!(m < n)) throw std::invalid_argument("backward_solve: need m < n");
  if (phi.dim() != model.dim()) throw std::invalid_argument("backward_solve: dimension mismatch");
  const std::int64_t first = std::clamp(opts.record_from.value_or(m), m, n);
  SolveResult res(Direction::Backward, m, n, first, n, model, RealVec(b.begin(), b.end()));
  const ForcingGrid forcing(model, phi.n());
  GridFunction cur = phi;
  if (first == m) res.store(m, cur, std::nullopt);
  for (std::int64_t t = m + 1; t <= n; ++t) {
    const bool keep = t >= first;
    StepResult sr = step ? step(cur, t - 1, forcing, b, opts.track_argmin && keep)
                         : backward_step(cur, t - 1, forcing, b, opts.track_argmin && keep);
    cur = std::move(sr.values);
    if (opts.normalize) {
      const double c = cur.min();
      cur -= c;
      res.log_constant(t, c);
    }
    if (keep) res.store(t, cur, std::move(sr.argmin));
  }
  return res;
}

SolveResult forward_solve(const GridFunction& phi, std::int64_t m, std::int64_t n,
                          const ForcingModel& model, std::span<const double> b,
                          const SolveOptions& opts) {
  if (!(m < n)) throw std::invalid_argument("forward_solve: need m < n");
  if (phi.dim() != model.dim()) throw std::invalid_argument("forward_solve: dimension mismatch");
  const std::int64_t last = std::clamp(opts.record_to.value_or(n), m, n);
  SolveResult res(Direction::Forward, m, n, m, last, model, RealVec(b.begin(), b.end()));
  const ForcingGrid forcing(model, phi.n());
  GridFunction cur = phi;
  if (last == n) res.store(n, cur, std::nullopt);
  for (std::int64_t t = n - 1; t >= m; --t) {
    const bool keep = t <= last;
    StepResult sr = forward_step(cur, t, forcing, b, opts.track_argmin && keep);
    cur = std::move(sr.values);
    if (opts.normalize) {
      const double c = cur.min();
      cur -= c;
      res.log_constant(t, c);
    }
    if (keep) res.store(t, cur, std::move(sr.argmin));
  }
  return res;
}

namespace {

std::size_t grid_slot(std::array<std::int64_t, 2> p, const GridFunction& grid) {
  return grid.linear({wrap_index(p[0], grid.n()), grid.dim() == 2 ? wrap_index(p[1], grid.n()) : 0});
}

}  // namespace

Orbit backtrack_minimizer(const SolveResult& result, const TorusPoint& y) {
  if (result.direction() != Direction::Backward) {
    throw std::invalid_argument("backtrack_minimizer: needs a backward solve");
  }
  const std::int64_t t0 = result.first_recorded();
  const std::int64_t t1 = result.last_recorded();
  for (std::int64_t t = t0 + 1; t <= t1; ++t) {
    if (!result.has_map(t)) throw std::invalid_argument("backtrack_minimizer: missing argmin maps");
  }
  const GridFunction& grid = result.at(t1);
  const int dim = grid.dim();
  const double h = grid.h();
  const std::size_t len = static_cast<std::size_t>(t1 - t0 + 1);
  Orbit orbit{t0, std::vector<TorusPoint>(len), std::vector<RealVec>(len)};

  GridIndex cur = grid.nearest(y);
  for (std::int64_t t = t1; t >= t0; --t) {
    const std::size_t s = static_cast<std::size_t>(t - t0);
    orbit.x[s] = grid.point(cur);
    if (t == t0 && !result.has_map(t)) break;
    const auto p = result.map_at(t).lifted(grid.linear(cur));
    RealVec v(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      v[static_cast<std::size_t>(a)] = static_cast<double>(cur[static_cast<std::size_t>(a)] - p[static_cast<std::size_t>(a)]) * h;
    }
    orbit.v[s] = std::move(v);
    cur = grid.unravel(grid_slot(p, grid));
  }
  if (orbit.v[0].empty()) {
    // No step produced the first snapshot: extend by the inverse twist map,
    // v_{t0} = v_{t0+1} + grad F_{t0}(x_{t0}).
    const RealVec grad = result.model().eval_gradF(t0, orbit.x[0]);
    RealVec v = len > 1 ? orbit.v[1] : RealVec(static_cast<std::size_t>(dim), 0.0);
    for (int a = 0; a < dim; ++a) v[static_cast<std::size_t>(a)] += grad[static_cast<std::size_t>(a)];
    orbit.v[0] = std::move(v);
  }
  return orbit;
}

Orbit forward_minimizer(const SolveResult& result, const TorusPoint& x) {
  return forward_minimizer(result, x, result.first_recorded(), result.last_recorded());
}

Orbit forward_minimizer(const SolveResult& result, const TorusPoint& x, std::int64_t t0,
                        std::int64_t t1) {
  if (result.direction() != Direction::Forward) {
    throw std::invalid_argument("forward_minimizer: needs a forward solve");
  }
  if (t0 > t1 || !result.recorded(t0) || !result.recorded(t1)) {
    throw std::invalid_argument("forward_minimizer: range outside recorded times");
  }
  for (std::int64_t t = t0; t < t1; ++t) {
    if (!result.has_map(t)) throw std::invalid_argument("forward_minimizer: missing argmax maps");
  }
  const GridFunction& grid = result.at(t0);
  const int dim = grid.dim();
  const double h = grid.h();
  const std::size_t len = static_cast<std::size_t>(t1 - t0 + 1);
  Orbit orbit{t0, std::vector<TorusPoint>(len), std::vector<RealVec>(len)};

  GridIndex cur = grid.nearest(x);
  orbit.x[0] = grid.point(cur);
  for (std::int64_t t = t0; t < t1; ++t) {
    const auto p = result.map_at(t).lifted(grid.linear(cur));
    const std::size_t s = static_cast<std::size_t>(t + 1 - t0);
    RealVec v(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      v[static_cast<std::size_t>(a)] = static_cast<double>(p[static_cast<std::size_t>(a)] - cur[static_cast<std::size_t>(a)]) * h;
    }
    orbit.v[s] = std::move(v);
    cur = grid.unravel(grid_slot(p, grid));
    orbit.x[s] = grid.point(cur);
  }
  const RealVec grad = result.model().eval_gradF(t0, orbit.x[0]);
  RealVec v0 = len > 1 ? orbit.v[1] : RealVec(static_cast<std::size_t>(dim), 0.0);
  for (int a = 0; a < dim; ++a) v0[static_cast<std::size_t>(a)] += grad[static_cast<std::size_t>(a)];
  orbit.v[0] = std::move(v0);
  return orbit;
}

}  // namespace khj
