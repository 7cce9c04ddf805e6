#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csv_reader.hpp"
#include "khj/cli.hpp"

namespace fs = std::filesystem;
using namespace khj::cli;

namespace {

const fs::path kGolden = fs::path(KHJ_SOURCE_DIR) / "tests" / "golden";

struct Case {
  std::string config;
  std::string command;
  std::string file;
};

const std::vector<Case> kCases{
    {"converge_1d", "converge", "errors.csv"},         {"stationary_zero", "stationary", "stationary.csv"},
    {"stationary_1d", "stationary", "stationary.csv"}, {"stationary_2d", "stationary", "stationary.csv"},
    {"orbit_free", "orbit", "orbit.csv"},              {"orbit_2d", "orbit", "orbit.csv"},
    {"lyapunov_1d", "lyapunov", "lyapunov.csv"},       {"lyapunov_zero", "lyapunov", "lyapunov.csv"},
    {"check_1d", "check", "check.tsv"},                {"refine_1d", "refine", "refine.csv"},
};

RunConfig load(const Case& c) {
  const ParseResult r = parse_config(kGolden / (c.config + ".json"), c.command);
  REQUIRE_MESSAGE(r.errors.empty(), c.config);
  return *r.config;
}

fs::path produce(const Case& c, const std::string& tag, int threads = 1) {
  const fs::path dir = fs::path(KHJ_TEST_TMP) / (c.config + "_" + tag);
  fs::remove_all(dir);
  RunOptions o;
  o.out_dir = dir;
  o.threads = threads;
  const int code = run(c.command, load(c), o);
  CHECK(code == kOk);
  return dir / c.file;
}

std::vector<std::string> expected_header(const std::string& command, int dim) {
  if (command == "converge") return {"N", "phi_id", "error", "sup_error"};
  if (command == "stationary") return {"time", "x_index", "psi_minus", "psi_plus", "q"};
  if (command == "check") return {"property", "trials", "max_violation", "tolerance", "status"};
  if (command == "refine") return {"n", "sup_error", "lambda_fit", "r_squared", "cauchy_difference"};
  std::vector<std::string> h{command == "lyapunov" ? "step" : "time"};
  if (command == "lyapunov") {
    for (int i = 1; i <= 2 * dim; ++i) h.push_back("lambda_" + std::to_string(i));
  } else {
    for (int i = 1; i <= dim; ++i) h.push_back("x_" + std::to_string(i));
    for (int i = 1; i <= dim; ++i) h.push_back("v_" + std::to_string(i));
  }
  return h;
}

/// Column structure and per-command content rules.
void check_schema(const table::Table& t, const Case& c, const RunConfig& cfg) {
  INFO(c.config);
  REQUIRE(!t.comments.empty());
  CHECK(t.comments[0] == "# config_digest=" + cfg.digest);
  CHECK(t.header == expected_header(c.command, cfg.dimension));
  REQUIRE(!t.rows.empty());
  const std::size_t first_numeric = c.command == "check" ? 1 : 0;
  const std::size_t last_numeric = c.command == "check" ? 3 : t.header.size() - 1;
  std::vector<std::vector<double>> num;
  for (const auto& row : t.rows) {
    REQUIRE(row.size() == t.header.size());
    std::vector<double> vals;
    for (std::size_t k = first_numeric; k <= last_numeric; ++k) {
      const auto v = table::number(row[k]);
      CHECK_MESSAGE(v.has_value(), row[k]);
      vals.push_back(v.value_or(0.0));
    }
    num.push_back(vals);
  }

  if (c.command == "converge") {
    std::map<double, std::vector<double>> by_N;
    std::map<double, double> sup;
    for (const auto& r : num) {
      CHECK(r[1] >= 1);
      CHECK(r[1] <= cfg.num_initials);
      CHECK(r[2] >= 0.0);
      by_N[r[0]].push_back(r[2]);
      sup[r[0]] = r[3];
    }
    CHECK(by_N.size() == cfg.N_values.size());
    for (const auto& [N, errs] : by_N) {
      CHECK(errs.size() == static_cast<std::size_t>(cfg.num_initials));
      CHECK(*std::max_element(errs.begin(), errs.end()) == sup[N]);
    }
  } else if (c.command == "stationary") {
    const std::size_t cells = cfg.dimension == 1 ? cfg.grid_points : cfg.grid_points * cfg.grid_points;
    CHECK(num.size() == cells * static_cast<std::size_t>(*cfg.window_end - *cfg.window_start + 1));
    std::map<double, double> min_minus;
    for (const auto& r : num) {
      CHECK(r[1] >= 0);
      CHECK(r[1] < static_cast<double>(cells));
      CHECK(r[4] == r[2] - r[3]);
      min_minus.try_emplace(r[0], r[2]);
      min_minus[r[0]] = std::min(min_minus[r[0]], r[2]);
    }
    for (const auto& [time, m] : min_minus) CHECK(m == 0.0);
  } else if (c.command == "orbit") {
    CHECK(num.size() == static_cast<std::size_t>(*cfg.window_end - *cfg.window_start + 1));
    for (std::size_t i = 0; i < num.size(); ++i) {
      CHECK(num[i][0] == static_cast<double>(*cfg.window_start + static_cast<std::int64_t>(i)));
      for (int a = 1; a <= cfg.dimension; ++a) CHECK((num[i][a] >= 0.0 && num[i][a] < 1.0));
    }
  } else if (c.command == "lyapunov") {
    CHECK(num.size() == static_cast<std::size_t>(*cfg.window_end - *cfg.window_start));
    for (std::size_t i = 0; i < num.size(); ++i) {
      CHECK(num[i][0] == static_cast<double>(i + 1));
      for (std::size_t k = 2; k < num[i].size(); ++k) CHECK(num[i][k] >= num[i][k - 1]);
    }
  } else if (c.command == "check") {
    for (const auto& row : t.rows) CHECK((row[4] == "PASS" || row[4] == "FAIL"));
    CHECK(t.rows.size() == 14);
  } else if (c.command == "refine") {
    CHECK(num.size() == cfg.refine_grid_points.size());
    CHECK(std::isnan(num[0][4]));
  }
}

bool close(const std::string& a, const std::string& b) {
  if (a == b) return true;
  const auto x = table::number(a), y = table::number(b);
  if (!x || !y) return false;
  return std::abs(*x - *y) <= 1e-12 + 1e-9 * std::max(std::abs(*x), std::abs(*y));
}

}  // namespace

TEST_CASE("golden files satisfy the documented schemas") {
  for (const Case& c : kCases) {
    const char sep = c.command == "check" ? '\t' : ',';
    check_schema(table::read((kGolden / (c.config + "__" + c.file)).string(), sep), c, load(c));
  }
}

TEST_CASE("fresh outputs match the golden files") {
  for (const Case& c : kCases) {
    INFO(c.config);
    const char sep = c.command == "check" ? '\t' : ',';
    const table::Table fresh = table::read(produce(c, "golden").string(), sep);
    const table::Table gold = table::read((kGolden / (c.config + "__" + c.file)).string(), sep);
    check_schema(fresh, c, load(c));
    CHECK(fresh.comments[0] == gold.comments[0]);
    CHECK(fresh.header == gold.header);
    REQUIRE(fresh.rows.size() == gold.rows.size());
    int mismatches = 0;
    for (std::size_t i = 0; i < fresh.rows.size(); ++i) {
      for (std::size_t k = 0; k < fresh.rows[i].size(); ++k) {
        if (!close(fresh.rows[i][k], gold.rows[i][k])) ++mismatches;
      }
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("reruns reproduce byte-identical bodies") {
  for (const Case& c : kCases) {
    INFO(c.config);
    const std::string a = table::slurp(produce(c, "run_a", 1).string());
    const std::string b = table::slurp(produce(c, "run_b", 3).string());
    CHECK(a == b);
  }
}

TEST_CASE("converge summary") {
  const Case c{"converge_1d", "converge", "errors.csv"};
  const fs::path csv = produce(c, "summary");
  const std::string text = table::slurp((csv.parent_path() / "summary.json").string());
  for (const char* key : {"\"config_digest\"", "\"lambda_fit\"", "\"r_squared\"", "\"flags\"", "\"lyapunov_exponents\"",
                          "\"sup_errors\"", "\"exponential\""}) {
    CHECK_MESSAGE(text.find(key) != std::string::npos, key);
  }
  CHECK(text.find("NaN") == std::string::npos);
}

TEST_CASE("zero forcing outputs") {
  const table::Table st = table::read((kGolden / "stationary_zero__stationary.csv").string());
  for (const auto& row : st.rows) {
    CHECK(row[2] == "0");
    CHECK(row[3] == "0");
  }
  const table::Table ly = table::read((kGolden / "lyapunov_zero__lyapunov.csv").string());
  for (std::size_t k = 1; k < ly.header.size(); ++k) CHECK(std::abs(*table::number(ly.rows.back()[k])) <= 0.05);
  const table::Table orb = table::read((kGolden / "orbit_free__orbit.csv").string());
  for (std::size_t i = 1; i < orb.rows.size(); ++i) {
    const double step = *table::number(orb.rows[i][1]) - *table::number(orb.rows[i - 1][1]);
    CHECK(std::abs(step - 0.25 - std::round(step - 0.25)) <= 1e-12);
    CHECK(orb.rows[i][2] == "0.25");
  }
}
