#include "khj/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <thread>

#include "khj/rng.hpp"
#include "khj/stationary.hpp"

namespace khj {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Stream identifiers for auxiliary randomness.
constexpr std::uint64_t kStreamInitial = 0x696e6974;
constexpr std::uint64_t kStreamSuite = 0x7375697465;

double sup_abs_diff(const GridFunction& a, const GridFunction& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

double max_diff(const GridFunction& a, const GridFunction& b) {
  double d = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, a[k] - b[k]);
  return d;
}

ScalarField trig_polynomial(int dim, rng::KeyedStream& s) {
  struct Mode {
    int k0, k1;
    double c, sn;
  };
  std::vector<Mode> modes;
  if (dim == 1) {
    for (int k = 1; k <= 3; ++k) modes.push_back({k, 0, s.normal() / k, s.normal() / k});
  } else {
    for (int k0 = 0; k0 <= 2; ++k0) {
      for (int k1 = -2; k1 <= 2; ++k1) {
        if (k0 == 0 && k1 <= 0) continue;
        const double w = 1.0 / (k0 * k0 + k1 * k1);
        modes.push_back({k0, k1, s.normal() * w, s.normal() * w});
      }
    }
  }
  return [modes, dim](const TorusPoint& x) {
    double v = 0.0;
    for (const Mode& m : modes) {
      const double arg = kTwoPi * (m.k0 * x[0] + (dim == 2 ? m.k1 * x[1] : 0.0));
      v += m.c * std::cos(arg) + m.sn * std::sin(arg);
    }
    return v;
  };
}

ScalarField piecewise_linear(int dim, rng::KeyedStream& s) {
  constexpr int K = 8;
  std::vector<double> knots(dim == 1 ? K : K * K);
  for (double& k : knots) k = s.uniform(-0.5, 0.5);
  return [knots, dim](const TorusPoint& x) {
    auto cell = [](double c, int& i0, double& f) {
      const double u = c * K;
      i0 = std::min(static_cast<int>(u), K - 1);
      f = u - i0;
    };
    int i, j;
    double fi, fj;
    cell(x[0], i, fi);
    if (dim == 1) return knots[i] * (1.0 - fi) + knots[(i + 1) % K] * fi;
    cell(x[1], j, fj);
    auto kv = [&](int a, int c) { return knots[(a % K) * K + (c % K)]; };
    return (kv(i, j) * (1.0 - fj) + kv(i, j + 1) * fj) * (1.0 - fi) +
           (kv(i + 1, j) * (1.0 - fj) + kv(i + 1, j + 1) * fj) * fi;
  };
}

// Mixture of smooth and rough fields for the property suite.
GridFunction random_field(int dim, int n, rng::KeyedStream& s) {
  const double scale = s.uniform(0.1, 3.0);
  if (s.uniform() < 0.5) {
    const ScalarField f = trig_polynomial(dim, s);
    return GridFunction::sample(dim, n, [&](const TorusPoint& x) { return scale * f(x); });
  }
  GridFunction g(dim, n);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = s.uniform(-scale, scale);
  return g;
}

std::vector<double> errors_against(const GridFunction& ref, const std::vector<ScalarField>& fields,
                                   const ForcingModel& model, std::span<const double> b,
                                   std::span<const std::int64_t> N_values, int threads,
                                   std::vector<std::vector<double>>& errors) {
  const int dim = ref.dim();
  const int n = ref.n();
  errors.assign(fields.size(), std::vector<double>(N_values.size(), 0.0));
  parallel_for(fields.size(), threads, [&](std::size_t s) {
    const GridFunction phi = GridFunction::sample(dim, n, fields[s]);
    for (std::size_t i = 0; i < N_values.size(); ++i) {
      const std::int64_t N = N_values[i];
      const SolveResult r = backward_solve(phi, -N, 0, model, b);
      errors[s][i] = star_seminorm(r.at(0) - ref);
    }
  });
  std::vector<double> sup(N_values.size(), 0.0);
  for (const auto& row : errors) {
    for (std::size_t i = 0; i < row.size(); ++i) sup[i] = std::max(sup[i], row[i]);
  }
  return sup;
}

// Fits log(e) against N (or log N) over the points above the floor.
std::optional<LineFit> fit_above(std::span<const std::int64_t> N_values, std::span<const double> e,
                                 double floor, bool log_x) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] > floor) {
      const auto N = static_cast<double>(N_values[i]);
      x.push_back(log_x ? std::log(N) : N);
      y.push_back(std::log(e[i]));
    }
  }
  if (x.size() < 2) return std::nullopt;
  return fit_line(x, y);
}

}  // namespace

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("KICKED_HJ_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::vector<ScalarField> initial_conditions(int dim, int count, std::uint64_t seed) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("initial_conditions: dim must be 1 or 2");
  std::vector<ScalarField> out;
  for (int s = 0; s < count; ++s) {
    rng::KeyedStream stream(seed, kStreamInitial + static_cast<std::uint64_t>(s));
    if (s == 0) {
      out.emplace_back([](const TorusPoint&) { return 0.0; });
    } else if (s == 1) {
      out.push_back(trig_polynomial(dim, stream));
    } else {
      out.push_back(piecewise_linear(dim, stream));
    }
  }
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const auto m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  f.points = x.size();
  return f;
}

bool ConvergenceReport::flagged(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

bool ConvergenceReport::exponential() const {
  return flags.empty() && std::isfinite(lambda_fit) && lambda_fit > 0.0 && r_squared >= 0.95;
}

ConvergenceReport convergence_rate(const ForcingModel& model, std::span<const double> b, int n,
                                   std::span<const std::int64_t> N_values, int num_initials,
                                   std::uint64_t seed, const ConvergenceOptions& opts) {
  if (num_initials < 3) throw std::invalid_argument("convergence_rate: need at least 3 initial conditions");
  if (N_values.empty()) throw std::invalid_argument("convergence_rate: N_values is empty");
  for (std::size_t i = 0; i < N_values.size(); ++i) {
    if (N_values[i] < 1 || (i > 0 && N_values[i] <= N_values[i - 1])) {
      throw std::invalid_argument("convergence_rate: N_values must be positive and increasing");
    }
  }
  const int dim = model.dim();
  const std::int64_t max_N = N_values.back();
  const std::vector<ScalarField> fields = initial_conditions(dim, num_initials, seed);

  ConvergenceReport rep;
  rep.N_values.assign(N_values.begin(), N_values.end());
  rep.config_digest = opts.config_digest;

  const GridFunction ref = compute_psi_minus(model, b, n, Window{0, 0}, 2 * max_N).at(0);
  const GridFunction ref_long = compute_psi_minus(model, b, n, Window{0, 0}, 4 * max_N).at(0);
  rep.reference_residual = star_seminorm(ref - ref_long);
  rep.sup_errors = errors_against(ref, fields, model, b, N_values, opts.threads, rep.errors);

  // Rounding level: a few thousand ulps of the magnitudes involved.
  double scale = 1.0;
  for (const ScalarField& f : fields) scale = std::max(scale, oscillation(GridFunction::sample(dim, n, f)));
  const double rounding_floor = 1e3 * std::numeric_limits<double>::epsilon() * scale;
  rep.floor_estimate = rounding_floor;

  if (opts.estimate_floor && n / 2 >= 16) {
    const int nc = n / 2;
    const GridFunction ref_c = compute_psi_minus(model, b, nc, Window{0, 0}, 2 * max_N).at(0);
    std::vector<std::vector<double>> coarse_errors;
    rep.coarse_sup_errors = errors_against(ref_c, fields, model, b, N_values, opts.threads, coarse_errors);
    // The curves diverge at the first N where one of them has hit rounding
    // level or they disagree by more than a factor 2; the floor is the largest
    // fine-grid error from there on.
    for (std::size_t i = 0; i < N_values.size(); ++i) {
      const double ef = rep.sup_errors[i];
      const double ec = rep.coarse_sup_errors[i];
      const bool diverged =
          ef <= rounding_floor || ec <= rounding_floor || std::abs(std::log(ef / ec)) > std::log(2.0);
      if (diverged) {
        for (std::size_t k = i; k < N_values.size(); ++k) {
          rep.floor_estimate = std::max(rep.floor_estimate, rep.sup_errors[k]);
        }
        break;
      }
    }
  }

  const auto fit = fit_above(N_values, rep.sup_errors, rep.floor_estimate, false);
  rep.lambda_fit = kNaN;
  rep.r_squared = kNaN;
  rep.power_law_r_squared = kNaN;
  std::size_t first = N_values.size(), last = 0;
  for (std::size_t i = 0; i < N_values.size(); ++i) {
    if (rep.sup_errors[i] > rep.floor_estimate) {
      first = std::min(first, i);
      last = i;
      ++rep.fit_points;
    }
  }
  if (rep.fit_points > 0) rep.fit_range = {N_values[first], N_values[last]};
  if (fit) {
    rep.lambda_fit = -fit->slope;
    rep.r_squared = fit->r_squared;
    rep.power_law_r_squared = fit_above(N_values, rep.sup_errors, rep.floor_estimate, true)->r_squared;
  }
  if (rep.fit_points < 4) rep.flags.emplace_back(kInsufficientDecayWindow);
  if (fit && (rep.power_law_r_squared > rep.r_squared || rep.lambda_fit <= 0.0)) {
    rep.flags.emplace_back(kNonExponential);
  }

  for (const auto& row : rep.errors) {
    const auto f = fit_above(N_values, row, rep.floor_estimate, false);
    rep.per_phi_lambda.push_back(f ? -f->slope : kNaN);
  }

  if (opts.lyapunov_window > 0) {
    StationaryOptions so;
    so.track_maps = true;
    const StationaryPair pair = compute_stationary_pair(model, b, n, Window{0, opts.lyapunov_window}, so);
    rep.lyapunov = lyapunov_exponents(global_minimizer(pair).orbit, model);
  }
  return rep;
}

std::vector<SuiteRow> invariant_suite(const ForcingModel& model, std::span<const double> b, int n,
                                      std::uint64_t seed, int trials, const SuiteOptions& opts) {
  if (trials < 1) throw std::invalid_argument("invariant_suite: trials must be >= 1");
  const int dim = model.dim();
  const double h = 1.0 / n;
  // Rows that compare against the direct O(n^2d) route use a smaller grid in d = 2.
  const int n_direct = dim == 1 ? n : std::min(n, 32);
  const ForcingGrid forcing(model, n);
  const ForcingGrid forcing_direct(model, n_direct);
  const StepOperator step = opts.step ? opts.step
                                      : StepOperator([](const GridFunction& phi, std::int64_t j, const ForcingGrid& f,
                                                        std::span<const double> bb, bool track) {
                                          return backward_step(phi, j, f, bb, track);
                                        });

  std::vector<SuiteRow> rows;
  auto run_row = [&](const std::string& name, double tol, std::uint64_t stream,
                     const std::function<double(rng::KeyedStream&)>& trial) {
    std::vector<double> v(static_cast<std::size_t>(trials), 0.0);
    parallel_for(v.size(), opts.threads, [&](std::size_t t) {
      rng::KeyedStream s(rng::hash_key(seed, kStreamSuite, static_cast<std::int64_t>(stream),
                                       static_cast<std::int64_t>(t)),
                         stream);
      v[t] = trial(s);
    });
    const double worst = *std::max_element(v.begin(), v.end());
    rows.push_back({name, trials, worst, tol, worst <= tol});
  };
  auto random_time = [](rng::KeyedStream& s) { return s.integer(-1000, 1000); };

  run_row("oracle_equivalence", 1e-12, 1, [&](rng::KeyedStream& s) {
    const GridFunction phi = random_field(dim, n_direct, s);
    const std::int64_t j = random_time(s);
    return sup_abs_diff(step(phi, j, forcing_direct, b, false).values,
                        backward_step_direct(phi, j, model, b));
  });

  run_row("weak_contraction", 1e-12, 2, [&](rng::KeyedStream& s) {
    GridFunction p1 = random_field(dim, n, s);
    GridFunction p2 = random_field(dim, n, s);
    const std::int64_t j0 = random_time(s);
    double worst = 0.0;
    for (std::int64_t k = 0; k < 10; ++k) {
      const double before = star_seminorm(p1 - p2);
      p1 = step(p1, j0 + k, forcing, b, false).values;
      p2 = step(p2, j0 + k, forcing, b, false).values;
      worst = std::max(worst, star_seminorm(p1 - p2) - before);
    }
    return worst;
  });

  run_row("constant_equivariance", 1e-12, 3, [&](rng::KeyedStream& s) {
    const GridFunction phi = random_field(dim, n, s);
    const double c = s.uniform(-10.0, 10.0);
    const std::int64_t j = random_time(s);
    const GridFunction shifted = step(phi + c, j, forcing, b, false).values;
    return sup_abs_diff(shifted, step(phi, j, forcing, b, false).values + c);
  });

  run_row("monotonicity", 1e-12, 4, [&](rng::KeyedStream& s) {
    const GridFunction lo = random_field(dim, n, s);
    GridFunction hi = lo;
    for (std::size_t k = 0; k < hi.size(); ++k) hi[k] += s.uniform(0.0, 1.0);
    const std::int64_t j = random_time(s);
    return std::max(0.0, max_diff(step(lo, j, forcing, b, false).values, step(hi, j, forcing, b, false).values));
  });

  run_row("semigroup", 1e-10, 5, [&](rng::KeyedStream& s) {
    const GridFunction phi = random_field(dim, n_direct, s);
    const std::int64_t horizon = s.integer(2, 32);
    const std::int64_t t0 = random_time(s);
    const std::int64_t t1 = t0 + s.integer(1, horizon - 1);
    const std::int64_t t2 = t0 + horizon;
    SolveOptions raw;
    raw.normalize = false;
    const GridFunction mid = backward_solve(phi, t0, t1, model, b, raw, step).at(t1);
    const GridFunction composed = backward_solve(mid, t1, t2, model, b, raw, step).at(t2);
    GridFunction direct = phi;
    for (std::int64_t t = t0; t < t2; ++t) direct = backward_step_direct(direct, t, model, b);
    return sup_abs_diff(composed, direct);
  });

  run_row("forward_backward_inequality", 1e-12, 6, [&](rng::KeyedStream& s) {
    const GridFunction phi = random_field(dim, n, s);
    const std::int64_t j = random_time(s);
    // Kf_j K_j phi <= phi and K_j Kf_j phi >= phi.
    const GridFunction fb = forward_step(step(phi, j, forcing, b, false).values, j, forcing, b).values;
    const GridFunction bf = step(forward_step(phi, j, forcing, b).values, j, forcing, b, false).values;
    return std::max({0.0, max_diff(fb, phi), max_diff(phi, bf)});
  });

  run_row("semiconcavity", 10.0 * h, 7, [&](rng::KeyedStream& s) {
    const GridFunction phi = random_field(dim, n, s);
    return std::max(0.0, semiconcavity_modulus(step(phi, random_time(s), forcing, b, false).values) - 2.0);
  });

  run_row("symplectic_jacobian", 1e-10, 8, [&](rng::KeyedStream& s) {
    RealVec x(static_cast<std::size_t>(dim));
    for (double& c : x) c = s.uniform();
    return std::abs(twist_jacobian(random_time(s), TorusPoint(x), model).determinant() - 1.0);
  });

  run_row("twist_inverse", 1e-12, 9, [&](rng::KeyedStream& s) {
    RealVec x(static_cast<std::size_t>(dim)), v(static_cast<std::size_t>(dim));
    for (double& c : x) c = s.uniform();
    for (double& c : v) c = s.uniform(-2.0, 2.0);
    const std::int64_t j = random_time(s);
    const PhasePoint p{TorusPoint(x), v};
    const PhasePoint back = inverse_twist_map(j, twist_map(j, p, model), model);
    double d = torus_distance(back.x, p.x);
    for (std::size_t a = 0; a < v.size(); ++a) d = std::max(d, std::abs(back.v[a] - v[a]));
    return d;
  });

  // Rows along minimizers share one stationary pair on a short window.
  constexpr std::int64_t W = 30;
  const Window window{0, W};
  const StationaryPair pair = compute_stationary_pair(model, b, n, window);
  double c2 = 0.0;
  for (std::int64_t t = 0; t <= W; ++t) c2 = std::max(c2, model.c2_norm_bound(t));
  const double K_hat = 2.0 * std::sqrt(static_cast<double>(dim)) * (c2 + 2.0);

  auto minimizer_trial = [&](rng::KeyedStream& s, int count) {
    SolveOptions so;
    so.track_argmin = true;
    const SolveResult res = backward_solve(random_field(dim, n, s), 0, W, model, b, so, step);
    std::vector<Orbit> orbits;
    for (int i = 0; i < count; ++i) {
      RealVec y(static_cast<std::size_t>(dim));
      for (double& c : y) c = s.uniform();
      orbits.push_back(backtrack_minimizer(res, TorusPoint(y)));
    }
    return std::pair{res, orbits};
  };

  run_row("qn_lyapunov_monotonicity", 1e-10, 10, [&](rng::KeyedStream& s) {
    const auto [res, orbits] = minimizer_trial(s, 1);
    const Orbit& o = orbits.front();
    double worst = 0.0;
    for (std::int64_t t = 0; t < W; ++t) {
      worst = std::max(worst, -q_difference(res, pair, t + 1, o.x_at(t + 1), t, o.x_at(t)));
    }
    return worst;
  });

  run_row("graph_lipschitz", 2.0 * h, 11, [&](rng::KeyedStream& s) {
    const auto [res, orbits] = minimizer_trial(s, 2);
    double worst = 0.0;
    for (std::int64_t t = 1; t < W; ++t) {
      const RealVec& v = orbits[0].v_at(t);
      const RealVec& eta = orbits[1].v_at(t);
      double dv = 0.0;
      for (std::size_t a = 0; a < v.size(); ++a) dv += (v[a] - eta[a]) * (v[a] - eta[a]);
      const double dx = torus_distance_l2(orbits[0].x_at(t), orbits[1].x_at(t));
      worst = std::max(worst, std::sqrt(dv) - K_hat * dx);
    }
    return worst;
  });

  run_row("qinf_backward_monotonicity", 1e-8, 12, [&](rng::KeyedStream& s) {
    RealVec y(static_cast<std::size_t>(dim));
    for (double& c : y) c = s.uniform();
    const Orbit o = backtrack_minimizer(pair.backward, TorusPoint(y));
    double worst = 0.0;
    for (std::int64_t t = 0; t < W; ++t) {
      worst = std::max(worst, -q_difference(pair.backward, pair, t + 1, o.x_at(t + 1), t, o.x_at(t)));
    }
    return worst;
  });

  {
    // min_x Q(x, j) with all normalization constants restored is constant in j.
    double worst = 0.0;
    const double q0 = q_function(pair, 0).min();
    for (std::int64_t t = 1; t <= W; ++t) {
      const double qt = q_function(pair, t).min() + pair.backward.offset_between(0, t) -
                        pair.forward.offset_between(0, t);
      worst = std::max(worst, std::abs(qt - q0));
    }
    rows.push_back({"qinf_minimum_constant", static_cast<int>(W), worst, 1e-10, worst <= 1e-10});
  }

  {
    // Strict: the fitted lower constant must be positive at every time.
    const GlobalMinimizer gm = global_minimizer(pair);
    double a_min = std::numeric_limits<double>::infinity();
    for (std::int64_t t = 0; t <= W; ++t) {
      a_min = std::min(a_min, nondegeneracy_estimate(pair, gm.orbit, t, 0.1));
    }
    rows.push_back({"quadratic_pinching", static_cast<int>(W + 1), 0.0 - a_min, 0.0, a_min > 0.0});
  }
  return rows;
}

std::vector<RefinementRow> refinement_study(const ForcingModel& model, std::span<const double> b,
                                            std::span<const int> n_values, std::int64_t N,
                                            std::uint64_t seed, int threads) {
  if (n_values.empty()) throw std::invalid_argument("refinement_study: no resolutions");
  if (N < 16) throw std::invalid_argument("refinement_study: N must be >= 16");
  std::vector<std::int64_t> Ns;
  for (std::int64_t k = 4; k <= N; k += 4) Ns.push_back(k);
  std::vector<RefinementRow> rows;
  GridFunction prev_ref;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    const int n = n_values[i];
    if (i > 0 && (n % n_values[i - 1] != 0 || n <= n_values[i - 1])) {
      throw std::invalid_argument("refinement_study: each resolution must be a multiple of the previous");
    }
    ConvergenceOptions co;
    co.threads = threads;
    co.lyapunov_window = 0;
    const ConvergenceReport rep = convergence_rate(model, b, n, Ns, 5, seed, co);
    const GridFunction ref = compute_psi_minus(model, b, n, Window{0, 0}, 2 * N).at(0);
    RefinementRow row{n, rep.sup_errors.back(), rep.lambda_fit, rep.r_squared, kNaN};
    if (i > 0) {
      const int ratio = n / prev_ref.n();
      GridFunction coarse(prev_ref.dim(), prev_ref.n());
      for (std::size_t k = 0; k < coarse.size(); ++k) {
        GridIndex idx = coarse.unravel(k);
        for (int& c : idx) c *= ratio;
        coarse[k] = ref.at(idx);
      }
      row.cauchy_difference = star_seminorm(coarse - prev_ref);
    }
    rows.push_back(row);
    prev_ref = ref;
  }
  return rows;
}

}  // namespace khj
