#include "khj/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "khj/dynamics.hpp"
#include "khj/experiments.hpp"
#include "khj/stationary.hpp"

namespace khj::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kTopLevelKeys{
    "dimension", "grid_points",  "b",         "basis",           "distribution",       "seed",
    "window",    "burn_in",      "N_values",  "num_initials",    "trials",             "lyapunov_window",
    "refine_grid_points",        "backtrack_from",               "output_path"};

class Validator {
 public:
  void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.contains(key)) error(prefix + key, "unknown key '" + key + "'");
    }
  }

  std::optional<std::int64_t> integer(const json& obj, const std::string& key, const std::string& path,
                                      bool required) {
    if (!obj.contains(key)) {
      if (required) error(path, "required field is missing");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(path, "must be an integer");
      return std::nullopt;
    }
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      error(path, "out of range");
      return std::nullopt;
    }
    return v.get<std::int64_t>();
  }

  std::optional<double> number(const json& v, const std::string& path) {
    if (!v.is_number()) {
      error(path, "must be a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      error(path, "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<RealVec> vector(const json& v, const std::string& path, std::optional<int> length) {
    if (!v.is_array()) {
      error(path, "must be an array of numbers");
      return std::nullopt;
    }
    if (length && static_cast<int>(v.size()) != *length) {
      error(path, "must have " + std::to_string(*length) + " entries (one per dimension)");
      return std::nullopt;
    }
    RealVec out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto x = number(v[i], path + "[" + std::to_string(i) + "]");
      ok = ok && x.has_value();
      if (x) out.push_back(*x);
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::vector<std::string> errors;
};

std::optional<BasisPotential> parse_mode(Validator& val, const json& m, const std::string& path,
                                         std::optional<int> dim) {
  if (!m.is_object()) {
    val.error(path, "must be an object with kind, wavevector, amplitude");
    return std::nullopt;
  }
  val.reject_unknown(m, {"kind", "wavevector", "amplitude"}, path + ".");
  BasisPotential mode;
  bool ok = true;
  if (!m.contains("kind") || !m["kind"].is_string()) {
    val.error(path + ".kind", "must be \"cos\" or \"sin\"");
    ok = false;
  } else if (m["kind"] == "cos") {
    mode.kind = BasisKind::Cos;
  } else if (m["kind"] == "sin") {
    mode.kind = BasisKind::Sin;
  } else {
    val.error(path + ".kind", "must be \"cos\" or \"sin\"");
    ok = false;
  }
  const std::string wpath = path + ".wavevector";
  if (!m.contains("wavevector") || !m["wavevector"].is_array()) {
    val.error(wpath, "must be an array of integers");
    ok = false;
  } else {
    const json& w = m["wavevector"];
    bool nonzero = false;
    bool ints = true;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w[i].is_number_integer()) {
        val.error(wpath + "[" + std::to_string(i) + "]", "must be an integer");
        ints = false;
        continue;
      }
      mode.wavevector.push_back(w[i].get<int>());
      nonzero = nonzero || mode.wavevector.back() != 0;
    }
    if (dim && static_cast<int>(w.size()) != *dim) {
      val.error(wpath, "must have " + std::to_string(*dim) + " entries (one per dimension)");
      ok = false;
    } else if (ints && !nonzero) {
      val.error(wpath, "must be nonzero");
    }
    ok = ok && ints && nonzero;
  }
  if (m.contains("amplitude")) {
    const auto a = val.number(m["amplitude"], path + ".amplitude");
    if (a) mode.amplitude = *a;
    ok = ok && a.has_value();
  }
  if (!ok) return std::nullopt;
  return mode;
}

std::optional<CoefficientDistribution> parse_distribution(Validator& val, const json& d) {
  const std::string path = "distribution";
  if (!d.is_object()) {
    val.error(path, "must be an object with kind and params");
    return std::nullopt;
  }
  val.reject_unknown(d, {"kind", "params"}, path + ".");
  if (!d.contains("kind") || !d["kind"].is_string() || (d["kind"] != "gaussian" && d["kind"] != "uniform")) {
    val.error(path + ".kind", "must be \"gaussian\" or \"uniform\"");
    return std::nullopt;
  }
  const bool gaussian = d["kind"] == "gaussian";
  if (!d.contains("params")) {
    val.error(path + ".params", "required field is missing");
    return std::nullopt;
  }
  const auto p = val.vector(d["params"], path + ".params", gaussian ? 1 : 2);
  if (!p) return std::nullopt;
  if (gaussian) {
    if (!((*p)[0] > 0.0)) {
      val.error(path + ".params[0]", "gaussian sigma must be > 0");
      return std::nullopt;
    }
    return CoefficientDistribution::gaussian((*p)[0]);
  }
  if (!((*p)[0] < (*p)[1])) {
    val.error(path + ".params", "uniform bounds must satisfy lo < hi");
    return std::nullopt;
  }
  return CoefficientDistribution::uniform((*p)[0], (*p)[1]);
}

void require(Validator& val, const json& j, const std::string& command, const std::string& key) {
  if (!j.contains(key)) val.error(key, "required for command '" + command + "'");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

ParseResult parse_config_text(const std::string& text, const std::string& command) {
  ParseResult out;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    out.errors.push_back(std::string("malformed JSON: ") + e.what());
    return out;
  }
  Validator val;
  if (!j.is_object()) {
    out.errors.push_back("<root>: config must be a JSON object");
    return out;
  }
  if (!command.empty() && std::find(commands().begin(), commands().end(), command) == commands().end()) {
    val.error("<command>", "unknown command '" + command + "'");
  }
  val.reject_unknown(j, kTopLevelKeys, "");

  RunConfig cfg;
  std::optional<int> dim;
  if (const auto d = val.integer(j, "dimension", "dimension", true)) {
    if (*d == 1 || *d == 2) {
      dim = static_cast<int>(*d);
      cfg.dimension = *dim;
    } else {
      val.error("dimension", "must be 1 or 2");
    }
  }
  if (const auto n = val.integer(j, "grid_points", "grid_points", true)) {
    if (*n < 16) {
      val.error("grid_points", "must satisfy grid_points ≥ 16 (got " + std::to_string(*n) + ")");
    } else if (*n > (1 << 20)) {
      val.error("grid_points", "must be at most 1048576");
    } else {
      cfg.grid_points = static_cast<int>(*n);
    }
  }
  if (const auto s = val.integer(j, "seed", "seed", true)) {
    if (*s < 0) {
      val.error("seed", "must be non-negative");
    } else {
      cfg.seed = static_cast<std::uint64_t>(*s);
    }
  }
  if (j.contains("b")) {
    if (const auto b = val.vector(j["b"], "b", dim)) cfg.b = *b;
  } else if (dim) {
    cfg.b.assign(static_cast<std::size_t>(*dim), 0.0);
  }
  if (j.contains("basis")) {
    const json& basis = j["basis"];
    if (!basis.is_array()) {
      val.error("basis", "must be an array of modes");
    } else if (basis.empty()) {
      val.error("basis", "must be nonempty");
    } else {
      for (std::size_t i = 0; i < basis.size(); ++i) {
        if (auto m = parse_mode(val, basis[i], "basis[" + std::to_string(i) + "]", dim)) {
          cfg.basis.push_back(std::move(*m));
        }
      }
    }
  } else if (dim) {
    cfg.basis = (*dim == 1 ? ForcingModel::default_1d(0) : ForcingModel::default_2d(0)).basis();
  }
  if (j.contains("distribution")) {
    if (auto d = parse_distribution(val, j["distribution"])) cfg.distribution = *d;
  } else {
    cfg.distribution = CoefficientDistribution::gaussian(1.0);
  }

  if (j.contains("window")) {
    const json& w = j["window"];
    if (!w.is_object()) {
      val.error("window", "must be an object with start and end");
    } else {
      val.reject_unknown(w, {"start", "end"}, "window.");
      cfg.window_start = val.integer(w, "start", "window.start", true);
      cfg.window_end = val.integer(w, "end", "window.end", true);
      if (cfg.window_start && cfg.window_end && *cfg.window_end <= *cfg.window_start) {
        val.error("window", "end must be greater than start");
      }
    }
  }
  if (const auto bi = val.integer(j, "burn_in", "burn_in", false)) {
    if (*bi < 0) val.error("burn_in", "must be ≥ 0 (0 selects the default)");
    cfg.burn_in = *bi;
  }
  if (j.contains("N_values")) {
    const json& ns = j["N_values"];
    if (!ns.is_array() || ns.empty()) {
      val.error("N_values", "must be a nonempty array of integers");
    } else {
      for (std::size_t i = 0; i < ns.size(); ++i) {
        const std::string p = "N_values[" + std::to_string(i) + "]";
        if (!ns[i].is_number_integer() || ns[i].get<std::int64_t>() < 1) {
          val.error(p, "must be a positive integer");
          continue;
        }
        const auto N = ns[i].get<std::int64_t>();
        if (!cfg.N_values.empty() && N <= cfg.N_values.back()) val.error(p, "N_values must be increasing");
        cfg.N_values.push_back(N);
      }
    }
  }
  if (const auto s = val.integer(j, "num_initials", "num_initials", false)) {
    if (*s < 3) val.error("num_initials", "must be ≥ 3");
    cfg.num_initials = static_cast<int>(*s);
  }
  if (const auto t = val.integer(j, "trials", "trials", false)) {
    if (*t < 1) val.error("trials", "must be ≥ 1");
    cfg.trials = static_cast<int>(*t);
  }
  if (const auto w = val.integer(j, "lyapunov_window", "lyapunov_window", false)) {
    if (*w != 0 && *w < 10) val.error("lyapunov_window", "must be 0 (skip) or ≥ 10");
    cfg.lyapunov_window = *w;
  }
  if (j.contains("refine_grid_points")) {
    const json& r = j["refine_grid_points"];
    if (!r.is_array() || r.size() < 2) {
      val.error("refine_grid_points", "must be an array of at least two grid sizes");
    } else {
      for (std::size_t i = 0; i < r.size(); ++i) {
        const std::string p = "refine_grid_points[" + std::to_string(i) + "]";
        if (!r[i].is_number_integer() || r[i].get<std::int64_t>() < 16 || r[i].get<std::int64_t>() > (1 << 20)) {
          val.error(p, "must be an integer with 16 ≤ value ≤ 1048576");
          continue;
        }
        const int n = r[i].get<int>();
        if (!cfg.refine_grid_points.empty() && (n <= cfg.refine_grid_points.back() ||
                                                n % cfg.refine_grid_points.back() != 0)) {
          val.error(p, "must be a larger multiple of the previous entry");
        }
        cfg.refine_grid_points.push_back(n);
      }
    }
  }
  if (j.contains("backtrack_from")) {
    if (const auto y = val.vector(j["backtrack_from"], "backtrack_from", dim)) cfg.backtrack_from = *y;
  }
  if (j.contains("output_path")) {
    if (!j["output_path"].is_string()) {
      val.error("output_path", "must be a string");
    } else {
      cfg.output_path = j["output_path"].get<std::string>();
    }
  }

  if (command == "converge") {
    require(val, j, command, "N_values");
    if (!cfg.N_values.empty() && cfg.N_values.size() < 2) val.error("N_values", "converge needs at least two values");
  } else if (command == "stationary" || command == "orbit") {
    require(val, j, command, "window");
  } else if (command == "lyapunov") {
    require(val, j, command, "window");
    if (cfg.window_start && cfg.window_end && *cfg.window_end - *cfg.window_start < 10) {
      val.error("window", "lyapunov needs at least 10 steps");
    }
  } else if (command == "check") {
    require(val, j, command, "trials");
  } else if (command == "refine") {
    require(val, j, command, "refine_grid_points");
    require(val, j, command, "N_values");
    if (!cfg.N_values.empty() && cfg.N_values.back() < 16) val.error("N_values", "refine needs max(N_values) ≥ 16");
  }

  out.errors = std::move(val.errors);
  if (out.errors.empty()) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    cfg.digest = hex;
    out.config = std::move(cfg);
  }
  return out;
}

ParseResult parse_config(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return ParseResult{std::nullopt, {path.string() + ": cannot open config file"}};
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), command);
}

namespace {

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& digest) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# config_digest=" << digest << '\n';
  }
  void comment(const std::string& text) { out_ << "# " << text << '\n'; }
  void row(const std::vector<std::string>& cells, char sep = ',') {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << sep;
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

Window window_of(const RunConfig& c) { return Window{*c.window_start, *c.window_end}; }

StationaryPair stationary_for(const RunConfig& c, bool track) {
  StationaryOptions so;
  so.burn_in = c.burn_in;
  so.track_maps = track;
  return compute_stationary_pair(c.model(), c.b, c.grid_points, window_of(c), so);
}

int run_converge(const RunConfig& c, const RunOptions& o, int threads) {
  ConvergenceOptions co;
  co.threads = threads;
  co.lyapunov_window = c.lyapunov_window;
  co.config_digest = c.digest;
  const ConvergenceReport rep =
      convergence_rate(c.model(), c.b, c.grid_points, c.N_values, c.num_initials, c.seed, co);

  CsvFile csv(o.out_dir / "errors.csv", c.digest);
  csv.row({"N", "phi_id", "error", "sup_error"});
  for (std::size_t i = 0; i < rep.N_values.size(); ++i) {
    for (std::size_t s = 0; s < rep.errors.size(); ++s) {
      csv.row({std::to_string(rep.N_values[i]), std::to_string(s + 1), format_number(rep.errors[s][i]),
               format_number(rep.sup_errors[i])});
    }
  }

  json summary;
  summary["config_digest"] = c.digest;
  summary["N_values"] = rep.N_values;
  json sup = json::array(), coarse = json::array(), per_phi = json::array(), lyap = json::array();
  for (double e : rep.sup_errors) sup.push_back(number_or_null(e));
  for (double e : rep.coarse_sup_errors) coarse.push_back(number_or_null(e));
  for (double l : rep.per_phi_lambda) per_phi.push_back(number_or_null(l));
  for (double l : rep.lyapunov.exponents) lyap.push_back(number_or_null(l));
  summary["sup_errors"] = sup;
  summary["coarse_sup_errors"] = coarse;
  summary["lambda_fit"] = number_or_null(rep.lambda_fit);
  summary["r_squared"] = number_or_null(rep.r_squared);
  summary["power_law_r_squared"] = number_or_null(rep.power_law_r_squared);
  summary["fit_range"] = rep.fit_range;
  summary["fit_points"] = rep.fit_points;
  summary["floor_estimate"] = number_or_null(rep.floor_estimate);
  summary["reference_residual"] = number_or_null(rep.reference_residual);
  summary["per_phi_lambda"] = per_phi;
  summary["lyapunov_exponents"] = lyap;
  summary["flags"] = rep.flags;
  summary["exponential"] = rep.exponential();
  std::ofstream js(o.out_dir / "summary.json", std::ios::binary);
  js << summary.dump(2) << '\n';

  if (o.verbose) {
    std::cerr << "lambda_fit=" << format_number(rep.lambda_fit) << " r_squared=" << format_number(rep.r_squared)
              << " floor=" << format_number(rep.floor_estimate) << " fit_points=" << rep.fit_points << '\n';
    for (const auto& f : rep.flags) std::cerr << "flag: " << f << '\n';
  }
  return kOk;
}

int run_stationary(const RunConfig& c, const RunOptions& o) {
  const StationaryPair pair = stationary_for(c, false);
  CsvFile csv(o.out_dir / "stationary.csv", c.digest);
  csv.comment("burn_in=" + std::to_string(pair.burn_in) + " residual=" + format_number(pair.residual));
  csv.row({"time", "x_index", "psi_minus", "psi_plus", "q"});
  for (std::int64_t t = pair.window.lo; t <= pair.window.hi; ++t) {
    const GridFunction& pm = pair.psi_minus(t);
    const GridFunction& pp = pair.psi_plus(t);
    for (std::size_t k = 0; k < pm.size(); ++k) {
      csv.row({std::to_string(t), std::to_string(k), format_number(pm[k]), format_number(pp[k]),
               format_number(pm[k] - pp[k])});
    }
  }
  if (o.verbose) std::cerr << "burn_in=" << pair.burn_in << " residual=" << format_number(pair.residual) << '\n';
  return kOk;
}

int run_lyapunov(const RunConfig& c, const RunOptions& o) {
  const StationaryPair pair = stationary_for(c, true);
  const GlobalMinimizer gm = global_minimizer(pair);
  if (gm.degenerate) std::cerr << "warning: global minimizer is degenerate at some times\n";
  const LyapunovResult lr = lyapunov_exponents(gm.orbit, c.model());
  CsvFile csv(o.out_dir / "lyapunov.csv", c.digest);
  std::vector<std::string> header{"step"};
  for (std::size_t i = 0; i < lr.exponents.size(); ++i) header.push_back("lambda_" + std::to_string(i + 1));
  csv.row(header);
  for (std::size_t k = 0; k < lr.per_step_log.size(); ++k) {
    std::vector<std::string> cells{std::to_string(k + 1)};
    for (double l : lr.per_step_log[k]) cells.push_back(format_number(l));
    csv.row(cells);
  }
  if (o.verbose) {
    std::cerr << "exponents:";
    for (double l : lr.exponents) std::cerr << ' ' << format_number(l);
    std::cerr << '\n';
  }
  return kOk;
}

int run_orbit(const RunConfig& c, const RunOptions& o) {
  const StationaryPair pair = stationary_for(c, true);
  Orbit orbit;
  if (c.backtrack_from) {
    orbit = backtrack_minimizer(pair.backward, TorusPoint(*c.backtrack_from));
  } else {
    const GlobalMinimizer gm = global_minimizer(pair);
    if (gm.degenerate) std::cerr << "warning: global minimizer is degenerate at some times\n";
    orbit = gm.orbit;
  }
  CsvFile csv(o.out_dir / "orbit.csv", c.digest);
  std::vector<std::string> header{"time"};
  for (int a = 1; a <= c.dimension; ++a) header.push_back("x_" + std::to_string(a));
  for (int a = 1; a <= c.dimension; ++a) header.push_back("v_" + std::to_string(a));
  csv.row(header);
  for (std::size_t s = 0; s < orbit.size(); ++s) {
    std::vector<std::string> cells{std::to_string(orbit.t0 + static_cast<std::int64_t>(s))};
    for (int a = 0; a < c.dimension; ++a) cells.push_back(format_number(orbit.x[s][a]));
    for (double v : orbit.v[s]) cells.push_back(format_number(v));
    csv.row(cells);
  }
  if (o.verbose) {
    std::cerr << "twist residual=" << format_number(verify_minimizer_is_orbit(orbit, c.model())) << '\n';
  }
  return kOk;
}

int run_check(const RunConfig& c, const RunOptions& o, int threads) {
  SuiteOptions so;
  so.threads = threads;
  const auto rows = invariant_suite(c.model(), c.b, c.grid_points, c.seed, c.trials, so);
  CsvFile tsv(o.out_dir / "check.tsv", c.digest);
  tsv.row({"property", "trials", "max_violation", "tolerance", "status"}, '\t');
  bool all = true;
  for (const SuiteRow& r : rows) {
    const std::vector<std::string> cells{r.property, std::to_string(r.trials), format_number(r.max_violation),
                                         format_number(r.tolerance), r.pass ? "PASS" : "FAIL"};
    tsv.row(cells, '\t');
    std::cout << r.property << '\t' << cells[1] << '\t' << cells[2] << '\t' << cells[3] << '\t' << cells[4] << '\n';
    all = all && r.pass;
  }
  return all ? kOk : kCheckFailed;
}

int run_refine(const RunConfig& c, const RunOptions& o, int threads) {
  const auto rows = refinement_study(c.model(), c.b, c.refine_grid_points, c.N_values.back(), c.seed, threads);
  CsvFile csv(o.out_dir / "refine.csv", c.digest);
  csv.row({"n", "sup_error", "lambda_fit", "r_squared", "cauchy_difference"});
  for (const RefinementRow& r : rows) {
    csv.row({std::to_string(r.n), format_number(r.sup_error), format_number(r.lambda_fit),
             format_number(r.r_squared), format_number(r.cauchy_difference)});
  }
  return kOk;
}

}  // namespace

int run(const std::string& command, const RunConfig& config, const RunOptions& opts) {
  try {
    std::filesystem::create_directories(opts.out_dir);
    const int threads = resolve_threads(opts.threads);
    if (opts.verbose) std::cerr << command << ": config " << config.digest << ", " << threads << " thread(s)\n";
    if (command == "converge") return run_converge(config, opts, threads);
    if (command == "stationary") return run_stationary(config, opts);
    if (command == "lyapunov") return run_lyapunov(config, opts);
    if (command == "orbit") return run_orbit(config, opts);
    if (command == "check") return run_check(config, opts, threads);
    if (command == "refine") return run_refine(config, opts, threads);
    std::cerr << "error: unknown command '" << command << "'\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace khj::cli
