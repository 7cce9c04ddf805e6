#pragma once

// Configuration parsing and the command runners behind the kicked-hj tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "khj/forcing.hpp"
#include "khj/grid.hpp"

namespace khj::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kCheckFailed = 3 };

struct RunConfig {
  int dimension = 1;
  int grid_points = 0;
  RealVec b;
  std::vector<BasisPotential> basis;
  CoefficientDistribution distribution;
  std::uint64_t seed = 0;

  // Command-specific sections.
  std::optional<std::int64_t> window_start, window_end;
  std::int64_t burn_in = 0;
  std::vector<std::int64_t> N_values;
  int num_initials = 5;
  int trials = 0;
  std::int64_t lyapunov_window = 2000;
  std::vector<int> refine_grid_points;
  std::optional<RealVec> backtrack_from;
  std::optional<std::string> output_path;

  /// 16 hex digits: FNV-1a of the canonical (key-sorted, compact) JSON text.
  std::string digest;

  ForcingModel model() const { return ForcingModel(basis, distribution, seed); }
};

struct ParseResult {
  std::optional<RunConfig> config;
  /// Every problem found, each prefixed by its field path.
  std::vector<std::string> errors;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"converge", "stationary", "lyapunov", "orbit", "check", "refine"};
  return names;
}

/// Parses and validates a JSON document. Sections required by `command` are
/// enforced when it is non-empty.
ParseResult parse_config_text(const std::string& text, const std::string& command = "");
ParseResult parse_config(const std::filesystem::path& path, const std::string& command = "");

std::uint64_t fnv1a64(const std::string& bytes);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double x);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int threads = 0;
  bool verbose = false;
};

/// Executes a command and writes its outputs under out_dir. Returns an ExitCode.
int run(const std::string& command, const RunConfig& config, const RunOptions& opts);

}  // namespace khj::cli
