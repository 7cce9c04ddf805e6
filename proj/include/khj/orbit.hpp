#pragma once

#include <cstdint>
#include <vector>

#include "khj/grid.hpp"

namespace khj {

/// Finite sequence (x_j, v_j), j = t0 .. t0 + size() - 1. v_j is the
/// unreduced displacement x_j - x_{j-1} (velocity arriving at time j).
struct Orbit {
  std::int64_t t0 = 0;
  std::vector<TorusPoint> x;
  std::vector<RealVec> v;

  std::size_t size() const { return x.size(); }
  std::int64_t t1() const { return t0 + static_cast<std::int64_t>(x.size()) - 1; }
  const TorusPoint& x_at(std::int64_t t) const { return x[static_cast<std::size_t>(t - t0)]; }
  const RealVec& v_at(std::int64_t t) const { return v[static_cast<std::size_t>(t - t0)]; }
};

}  // namespace khj
