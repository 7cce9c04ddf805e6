#pragma once

// Periodic grid functions on the unit torus T^d, d in {1, 2}.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace khj {

using RealVec = std::vector<double>;

/// Multi-index on the grid. Only the first `dim` entries are meaningful.
using GridIndex = std::array<int, 2>;

/// A point of T^d. Coordinates are always reduced to [0, 1).
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(RealVec coords);
  TorusPoint(std::initializer_list<double> coords) : TorusPoint(RealVec(coords)) {}

  int dim() const { return static_cast<int>(coords_.size()); }
  double operator[](int axis) const { return coords_[static_cast<std::size_t>(axis)]; }
  const RealVec& coords() const { return coords_; }

  /// x + v, reduced.
  TorusPoint shifted(std::span<const double> v) const;

 private:
  RealVec coords_;
};

/// Reduce a real number into [0, 1).
double reduce_unit(double x);

/// Canonical representative v of y - x with each component in (-1/2, 1/2].
/// Half-period ties resolve to +1/2.
RealVec min_lift(const TorusPoint& x, const TorusPoint& y);

/// Max-norm torus distance between two points.
double torus_distance(const TorusPoint& x, const TorusPoint& y);

/// Euclidean torus distance (norm of min_lift).
double torus_distance_l2(const TorusPoint& x, const TorusPoint& y);

/// Scalar field sampled at x = i*h, h = 1/n, on [0,1)^dim. Row-major storage:
/// for dim == 2 the linear index of (i0, i1) is i0*n + i1.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int dim, int n, double fill = 0.0);
  GridFunction(int dim, int n, std::vector<double> values);

  /// Samples f at every grid point.
  static GridFunction sample(int dim, int n, const std::function<double(const TorusPoint&)>& f);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return 1.0 / n_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Periodic access by (possibly out-of-range) multi-index.
  double at(GridIndex idx) const { return values_[linear(wrap(idx))]; }

  std::size_t linear(GridIndex idx) const;
  GridIndex unravel(std::size_t k) const;
  GridIndex wrap(GridIndex idx) const;
  TorusPoint point(GridIndex idx) const;
  TorusPoint point(std::size_t k) const { return point(unravel(k)); }
  /// Nearest grid point to x.
  GridIndex nearest(const TorusPoint& x) const;

  double min() const;
  double max() const;
  /// Linear index of the first (smallest index) minimum.
  std::size_t argmin() const;

  bool same_grid(const GridFunction& other) const { return dim_ == other.dim_ && n_ == other.n_; }
  bool all_finite() const;

  GridFunction& operator+=(double c);
  GridFunction& operator-=(double c);
  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction operator-() const;

  friend GridFunction operator+(GridFunction a, double c) { return a += c; }
  friend GridFunction operator-(GridFunction a, double c) { return a -= c; }
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }

  bool operator==(const GridFunction&) const = default;

 private:
  int dim_ = 1;
  int n_ = 0;
  std::vector<double> values_;
};

/// ||f||_* = min_C sup |f - C| = (max f - min f) / 2.
double star_seminorm(const GridFunction& f);

/// max f - min f.
double oscillation(const GridFunction& f);

/// max |f|.
double sup_norm(const GridFunction& f);

/// Central differences with periodic wrap, one entry per axis.
RealVec fd_gradient(const GridFunction& f, GridIndex idx);

/// Largest periodic second difference (f(i+1) - 2 f(i) + f(i-1)) / h^2 over all
/// points and axes. f is numerically C semi-concave when this is <= 2C.
double semiconcavity_modulus(const GridFunction& f);

}  // namespace khj
