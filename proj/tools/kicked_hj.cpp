#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "khj/cli.hpp"

int main(int argc, char** argv) {
  using namespace khj::cli;

  CLI::App app{"Simulator for the randomly kicked Hamilton-Jacobi equation on the torus"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  bool verbose = false;
  app.add_option("command", command, "converge | stationary | lyapunov | orbit | check | refine")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "Output directory (default: config output_path, else .)");
  app.add_option("--threads", threads, "Worker threads, 0 = KICKED_HJ_THREADS or all cores")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", verbose, "Progress and summary on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  const ParseResult parsed = parse_config(config_path, command);
  if (!parsed.config) {
    for (const auto& err : parsed.errors) std::cerr << "config error: " << err << '\n';
    return kValidation;
  }
  RunOptions opts;
  opts.out_dir = !out_dir.empty() ? out_dir : parsed.config->output_path.value_or(".");
  opts.threads = threads;
  opts.verbose = verbose;
  return run(command, *parsed.config, opts);
}
