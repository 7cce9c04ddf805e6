#include "khj/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace khj {

double reduce_unit(double x) {
  double r = x - std::floor(x);
  // x slightly below an integer can round up to exactly 1.
  if (r >= 1.0) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(RealVec coords) : coords_(std::move(coords)) {
  if (coords_.empty() || coords_.size() > 2) {
    throw std::invalid_argument("TorusPoint: dimension must be 1 or 2");
  }
  for (double& c : coords_) {
    if (!std::isfinite(c)) throw std::invalid_argument("TorusPoint: non-finite coordinate");
    c = reduce_unit(c);
  }
}

TorusPoint TorusPoint::shifted(std::span<const double> v) const {
  RealVec c = coords_;
  for (std::size_t a = 0; a < c.size(); ++a) c[a] += v[a];
  return TorusPoint(std::move(c));
}

RealVec min_lift(const TorusPoint& x, const TorusPoint& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("min_lift: dimension mismatch");
  RealVec v(static_cast<std::size_t>(x.dim()));
  for (int a = 0; a < x.dim(); ++a) {
    double d = y[a] - x[a];
    v[static_cast<std::size_t>(a)] = d - std::ceil(d - 0.5);
  }
  return v;
}

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  double m = 0.0;
  for (double c : min_lift(x, y)) m = std::max(m, std::abs(c));
  return m;
}

double torus_distance_l2(const TorusPoint& x, const TorusPoint& y) {
  double s = 0.0;
  for (double c : min_lift(x, y)) s += c * c;
  return std::sqrt(s);
}

GridFunction::GridFunction(int dim, int n, double fill) : dim_(dim), n_(n) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("GridFunction: dim must be 1 or 2");
  if (n < 1) throw std::invalid_argument("GridFunction: n must be positive");
  std::size_t total = dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
  values_.assign(total, fill);
}

GridFunction::GridFunction(int dim, int n, std::vector<double> values) : GridFunction(dim, n) {
  if (values.size() != values_.size()) {
    throw std::invalid_argument("GridFunction: value count does not match n^dim");
  }
  values_ = std::move(values);
}

GridFunction GridFunction::sample(int dim, int n,
                                  const std::function<double(const TorusPoint&)>& f) {
  GridFunction g(dim, n);
  for (std::size_t k = 0; k < g.size(); ++k) g.values_[k] = f(g.point(k));
  return g;
}

std::size_t GridFunction::linear(GridIndex idx) const {
  if (dim_ == 1) return static_cast<std::size_t>(idx[0]);
  return static_cast<std::size_t>(idx[0]) * static_cast<std::size_t>(n_) +
         static_cast<std::size_t>(idx[1]);
}

GridIndex GridFunction::unravel(std::size_t k) const {
  if (dim_ == 1) return {static_cast<int>(k), 0};
  return {static_cast<int>(k / static_cast<std::size_t>(n_)),
          static_cast<int>(k % static_cast<std::size_t>(n_))};
}

GridIndex GridFunction::wrap(GridIndex idx) const {
  GridIndex w{0, 0};
  for (int a = 0; a < dim_; ++a) {
    int r = idx[static_cast<std::size_t>(a)] % n_;
    w[static_cast<std::size_t>(a)] = r < 0 ? r + n_ : r;
  }
  return w;
}

TorusPoint GridFunction::point(GridIndex idx) const {
  GridIndex w = wrap(idx);
  RealVec c(static_cast<std::size_t>(dim_));
  for (int a = 0; a < dim_; ++a) c[static_cast<std::size_t>(a)] = w[static_cast<std::size_t>(a)] * h();
  return TorusPoint(std::move(c));
}

GridIndex GridFunction::nearest(const TorusPoint& x) const {
  GridIndex idx{0, 0};
  for (int a = 0; a < dim_; ++a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(std::lround(x[a] * n_));
  }
  return wrap(idx);
}

double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }
double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }

std::size_t GridFunction::argmin() const {
  return static_cast<std::size_t>(std::min_element(values_.begin(), values_.end()) - values_.begin());
}

bool GridFunction::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GridFunction& GridFunction::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}

GridFunction& GridFunction::operator-=(double c) {
  for (double& v : values_) v -= c;
  return *this;
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  if (!same_grid(o)) throw std::invalid_argument("GridFunction: grid mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  if (!same_grid(o)) throw std::invalid_argument("GridFunction: grid mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

GridFunction GridFunction::operator-() const {
  GridFunction r = *this;
  for (double& v : r.values_) v = -v;
  return r;
}

double star_seminorm(const GridFunction& f) { return 0.5 * oscillation(f); }

double oscillation(const GridFunction& f) {
  if (f.empty()) throw std::invalid_argument("oscillation: empty grid function");
  auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
  return *hi - *lo;
}

double sup_norm(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

RealVec fd_gradient(const GridFunction& f, GridIndex idx) {
  RealVec g(static_cast<std::size_t>(f.dim()));
  for (int a = 0; a < f.dim(); ++a) {
    GridIndex up = idx, dn = idx;
    up[static_cast<std::size_t>(a)] += 1;
    dn[static_cast<std::size_t>(a)] -= 1;
    g[static_cast<std::size_t>(a)] = (f.at(up) - f.at(dn)) / (2.0 * f.h());
  }
  return g;
}

double semiconcavity_modulus(const GridFunction& f) {
  const double inv_h2 = static_cast<double>(f.n()) * f.n();
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.size(); ++k) {
    GridIndex idx = f.unravel(k);
    for (int a = 0; a < f.dim(); ++a) {
      GridIndex up = idx, dn = idx;
      up[static_cast<std::size_t>(a)] += 1;
      dn[static_cast<std::size_t>(a)] -= 1;
      m = std::max(m, (f.at(up) - 2.0 * f[k] + f.at(dn)) * inv_h2);
    }
  }
  return m;
}

}  // namespace khj
