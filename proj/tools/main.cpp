#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "brittle/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "brittle-bayes: optimal prior/posterior bounds over moment-constrained "
      "classes of Bayesian priors"};
  app.require_subcommand(1);

  brittle::RunConfig config;
  std::uint64_t seed_value = 0;
  int restarts_value = 0;
  double delta_value = 0.0;
  std::vector<std::string> sweep_texts;

  const auto add_common = [&](CLI::App* sub, bool wants_spec) {
    if (wants_spec) {
      sub->add_option("--spec", config.spec_path,
                      "Path to a JSON problem spec");
    }
    sub->add_option("--out", config.out_dir,
                    "Directory to write the emitted artifact into");
    sub->add_option("--format", config.format,
                    "Output format: table, csv, or json");
    sub->add_option("--seed", seed_value,
                    "Deterministic seed (fallback: BRITTLE_BAYES_SEED, then 1)");
    sub->add_option("--restarts", restarts_value, "Solver restart budget");
    sub->add_flag("--limit-mode", config.limit_mode,
                  "Replace shrinking observation balls by free variables");
    sub->add_option("--delta", delta_value, "Observation ball radius override");
    sub->add_option("--sweep", sweep_texts,
                    "Parameter sweep as NAME=V1,V2,... (repeatable)");
  };

  add_common(app.add_subcommand("prior", "Optimal prior bounds U(Pi), L(Pi)"),
             true);
  add_common(app.add_subcommand("posterior",
                                "Optimal posterior bounds U(Pi|B), L(Pi|B)"),
             true);
  add_common(app.add_subcommand("sandwich",
                                "Six-way information bound chain"),
             true);
  add_common(app.add_subcommand("brittleness",
                                "Brittleness certificates for a moment class"),
             true);
  add_common(app.add_subcommand("curve",
                                "Learning/gamma band curves vs. closed forms"),
             true);
  add_common(app.add_subcommand("perturb",
                                "Nearly indistinguishable model pair demo"),
             true);
  CLI::App* scenarios =
      app.add_subcommand("scenarios", "Run the worked-example suite");
  scenarios->add_option("names", config.args,
                        "Scenario names to run (default: all)");
  scenarios->add_flag("--all", config.all, "Run every registered scenario");
  add_common(scenarios, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  config.command = sub->get_name();
  if (sub->count("--seed") > 0) config.seed = seed_value;
  if (sub->count("--restarts") > 0) config.restarts = restarts_value;
  if (sub->count("--delta") > 0) config.delta = delta_value;
  for (const std::string& text : sweep_texts) {
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --sweep expects NAME=V1,V2,...\n";
      return 1;
    }
    try {
      config.sweeps.emplace_back(
          text.substr(0, eq), brittle::parse_sweep_values(text.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  return brittle::run_cli(config, std::cout, std::cerr);
}
