#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace brittle {

// Parsed command line. The front end (tools/) populates this; run_cli owns
// dispatch, output, and the exit-code contract:
//   0 success, 1 usage/config error, 2 numerical failure, 3 scenario-suite
//   failure.
struct RunConfig {
  std::string command;
  std::string spec_path;
  std::string out_dir;
  std::string format = "table";  // table | csv | json
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  bool limit_mode = false;
  std::optional<double> delta;
  // --sweep NAME=V1,V2,...
  std::vector<std::pair<std::string, std::vector<double>>> sweeps;
  // Positional arguments (scenario name filters).
  std::vector<std::string> args;
  bool all = false;
};

// Seed resolution order: explicit flag, then BRITTLE_BAYES_SEED, then 1.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed);

// Parses "V1,V2,..." into values; throws std::invalid_argument on junk.
std::vector<double> parse_sweep_values(const std::string& text);

int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace brittle
