#pragma once

// Random kicked potentials F_j(x) = sum_i xi_j^i F_i(x) built from
// trigonometric basis modes, with coefficients drawn i.i.d. per kick time.

#include <cstdint>
#include <string>
#include <vector>

#include "khj/grid.hpp"

namespace khj {

enum class BasisKind { Cos, Sin };

/// amplitude * cos(2 pi k.x) or amplitude * sin(2 pi k.x).
struct BasisPotential {
  BasisKind kind = BasisKind::Cos;
  std::vector<int> wavevector;
  double amplitude = 1.0;

  int dim() const { return static_cast<int>(wavevector.size()); }
  double value(const TorusPoint& x) const;
  RealVec gradient(const TorusPoint& x) const;
  /// Row-major dim x dim.
  RealVec hessian(const TorusPoint& x) const;
  /// Upper bound of max(|F|, |grad F|, |hess F|) over the torus.
  double c2_bound() const;
};

struct CoefficientDistribution {
  enum class Kind { Gaussian, Uniform };
  Kind kind = Kind::Gaussian;
  // Gaussian: (sigma, unused). Uniform: (lo, hi).
  double p1 = 1.0;
  double p2 = 0.0;

  static CoefficientDistribution gaussian(double sigma);
  static CoefficientDistribution uniform(double lo, double hi);

  /// Maps a uniform draw in (0,1) to the distribution by inverse CDF.
  double from_unit(double u) const;
};

/// Immutable description of the random forcing. All queries are pure
/// functions of (seed, j, x).
class ForcingModel {
 public:
  ForcingModel(std::vector<BasisPotential> basis, CoefficientDistribution dist, std::uint64_t seed);

  /// d = 1, {cos 2 pi x, sin 2 pi x} with amplitude a, gaussian sigma.
  static ForcingModel default_1d(std::uint64_t seed, double amplitude = 1.0, double sigma = 1.0);
  /// d = 2, {cos, sin} x {(1,0), (0,1), (1,1)}, gaussian sigma.
  static ForcingModel default_2d(std::uint64_t seed, double amplitude = 1.0, double sigma = 1.0);
  /// F = 0: a single cos mode with zero amplitude.
  static ForcingModel zero(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return basis_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<BasisPotential>& basis() const { return basis_; }
  const CoefficientDistribution& distribution() const { return dist_; }

  ForcingModel with_seed(std::uint64_t seed) const { return ForcingModel(basis_, dist_, seed); }

  /// xi_j, one coefficient per basis mode. Keyed by (seed, j, i).
  RealVec sample_xi(std::int64_t j) const;

  double eval_F(std::int64_t j, const TorusPoint& x) const;
  RealVec eval_gradF(std::int64_t j, const TorusPoint& x) const;
  RealVec eval_hessF(std::int64_t j, const TorusPoint& x) const;

  /// Bound on ||F_j||_{C^2} from the coefficients.
  double c2_norm_bound(std::int64_t j) const;

 private:
  std::vector<BasisPotential> basis_;
  CoefficientDistribution dist_;
  std::uint64_t seed_;
  int dim_;
};

/// F_j sampled on the n-point grid.
GridFunction grid_F(const ForcingModel& model, std::int64_t j, int n);

/// Basis modes sampled once on a grid; F_j on the grid is then a weighted sum.
/// Produces values bit-identical to grid_F.
class ForcingGrid {
 public:
  ForcingGrid(const ForcingModel& model, int n);

  const ForcingModel& model() const { return model_; }
  int n() const { return n_; }
  GridFunction F(std::int64_t j) const;

 private:
  ForcingModel model_;
  int n_;
  std::vector<GridFunction> modes_;
};

std::string to_string(BasisKind k);

}  // namespace khj
