#include "khj/forcing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "khj/rng.hpp"

namespace khj {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kXiStream = 0x78695f6b69636bULL;

double phase(const BasisPotential& b, const TorusPoint& x) {
  double kx = 0.0;
  for (int a = 0; a < b.dim(); ++a) kx += b.wavevector[static_cast<std::size_t>(a)] * x[a];
  return kTwoPi * kx;
}

}  // namespace

double BasisPotential::value(const TorusPoint& x) const {
  const double p = phase(*this, x);
  return amplitude * (kind == BasisKind::Cos ? std::cos(p) : std::sin(p));
}

RealVec BasisPotential::gradient(const TorusPoint& x) const {
  const double p = phase(*this, x);
  // d/dx cos = -2 pi k sin, d/dx sin = 2 pi k cos
  const double s = kind == BasisKind::Cos ? -std::sin(p) : std::cos(p);
  RealVec g(static_cast<std::size_t>(dim()));
  for (int a = 0; a < dim(); ++a) {
    g[static_cast<std::size_t>(a)] = amplitude * kTwoPi * wavevector[static_cast<std::size_t>(a)] * s;
  }
  return g;
}

RealVec BasisPotential::hessian(const TorusPoint& x) const {
  const double p = phase(*this, x);
  const double c = kind == BasisKind::Cos ? std::cos(p) : std::sin(p);
  const auto d = static_cast<std::size_t>(dim());
  RealVec hss(d * d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      hss[a * d + b] = -amplitude * kTwoPi * kTwoPi * wavevector[a] * wavevector[b] * c;
    }
  }
  return hss;
}

double BasisPotential::c2_bound() const {
  double k2 = 0.0;
  for (int k : wavevector) k2 += static_cast<double>(k) * k;
  const double freq = kTwoPi * std::sqrt(k2);
  return std::abs(amplitude) * std::max({1.0, freq, freq * freq});
}

CoefficientDistribution CoefficientDistribution::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian: sigma must be positive and finite");
  }
  return {Kind::Gaussian, sigma, 0.0};
}

CoefficientDistribution CoefficientDistribution::uniform(double lo, double hi) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("uniform: need finite lo < hi");
  }
  return {Kind::Uniform, lo, hi};
}

double CoefficientDistribution::from_unit(double u) const {
  if (kind == Kind::Gaussian) return p1 * rng::normal_quantile(u);
  return p1 + (p2 - p1) * u;
}

ForcingModel::ForcingModel(std::vector<BasisPotential> basis, CoefficientDistribution dist,
                           std::uint64_t seed)
    : basis_(std::move(basis)), dist_(dist), seed_(seed) {
  if (basis_.empty()) throw std::invalid_argument("ForcingModel: basis must be nonempty");
  dim_ = basis_.front().dim();
  if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("ForcingModel: dimension must be 1 or 2");
  for (const auto& b : basis_) {
    if (b.dim() != dim_) throw std::invalid_argument("ForcingModel: basis dimensions differ");
    bool nonzero = false;
    for (int k : b.wavevector) nonzero = nonzero || k != 0;
    if (!nonzero) throw std::invalid_argument("ForcingModel: zero wavevector");
    if (!std::isfinite(b.amplitude)) throw std::invalid_argument("ForcingModel: non-finite amplitude");
  }
}

ForcingModel ForcingModel::default_1d(std::uint64_t seed, double amplitude, double sigma) {
  return ForcingModel({{BasisKind::Cos, {1}, amplitude}, {BasisKind::Sin, {1}, amplitude}},
                      CoefficientDistribution::gaussian(sigma), seed);
}

ForcingModel ForcingModel::default_2d(std::uint64_t seed, double amplitude, double sigma) {
  std::vector<BasisPotential> basis;
  for (std::vector<int> k : {std::vector<int>{1, 0}, {0, 1}, {1, 1}}) {
    basis.push_back({BasisKind::Cos, k, amplitude});
    basis.push_back({BasisKind::Sin, k, amplitude});
  }
  return ForcingModel(std::move(basis), CoefficientDistribution::gaussian(sigma), seed);
}

ForcingModel ForcingModel::zero(int dim) {
  std::vector<int> k(static_cast<std::size_t>(dim), 0);
  k[0] = 1;
  return ForcingModel({{BasisKind::Cos, k, 0.0}}, CoefficientDistribution::gaussian(1.0), 0);
}

RealVec ForcingModel::sample_xi(std::int64_t j) const {
  RealVec xi(basis_.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double u = rng::open_unit(rng::hash_key(seed_, kXiStream, j, static_cast<std::int64_t>(i)));
    xi[i] = dist_.from_unit(u);
  }
  return xi;
}

double ForcingModel::eval_F(std::int64_t j, const TorusPoint& x) const {
  const RealVec xi = sample_xi(j);
  double f = 0.0;
  for (std::size_t i = 0; i < basis_.size(); ++i) f += xi[i] * basis_[i].value(x);
  return f;
}

RealVec ForcingModel::eval_gradF(std::int64_t j, const TorusPoint& x) const {
  const RealVec xi = sample_xi(j);
  RealVec g(static_cast<std::size_t>(dim_), 0.0);
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const RealVec gi = basis_[i].gradient(x);
    for (std::size_t a = 0; a < g.size(); ++a) g[a] += xi[i] * gi[a];
  }
  return g;
}

RealVec ForcingModel::eval_hessF(std::int64_t j, const TorusPoint& x) const {
  const RealVec xi = sample_xi(j);
  const auto d = static_cast<std::size_t>(dim_);
  RealVec hss(d * d, 0.0);
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const RealVec hi = basis_[i].hessian(x);
    for (std::size_t a = 0; a < hss.size(); ++a) hss[a] += xi[i] * hi[a];
  }
  return hss;
}

double ForcingModel::c2_norm_bound(std::int64_t j) const {
  const RealVec xi = sample_xi(j);
  double s = 0.0;
  for (std::size_t i = 0; i < basis_.size(); ++i) s += std::abs(xi[i]) * basis_[i].c2_bound();
  return s;
}

GridFunction grid_F(const ForcingModel& model, std::int64_t j, int n) {
  return GridFunction::sample(model.dim(), n, [&](const TorusPoint& x) { return model.eval_F(j, x); });
}

ForcingGrid::ForcingGrid(const ForcingModel& model, int n) : model_(model), n_(n) {
  for (const auto& b : model_.basis()) {
    modes_.push_back(GridFunction::sample(model_.dim(), n, [&](const TorusPoint& x) { return b.value(x); }));
  }
}

GridFunction ForcingGrid::F(std::int64_t j) const {
  const RealVec xi = model_.sample_xi(j);
  GridFunction f(model_.dim(), n_, 0.0);
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const double c = xi[i];
    const auto mode = modes_[i].values();
    auto out = f.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * mode[k];
  }
  return f;
}

std::string to_string(BasisKind k) { return k == BasisKind::Cos ? "cos" : "sin"; }

}  // namespace khj
