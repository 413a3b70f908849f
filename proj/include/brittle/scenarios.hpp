#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "brittle/posterior.hpp"

namespace brittle {

// Outcome of one worked example. `expected` entries set to NaN are reported
// but not compared; `abs_error` is the largest deviation over comparable
// entries and `pass` additionally folds in scenario-specific criteria.
struct ScenarioReport {
  std::string name;
  std::string parameters;
  std::vector<std::string> labels;
  std::vector<double> computed;
  std::vector<double> expected;
  std::string provenance;
  double tolerance = 1e-9;
  double abs_error = 0.0;
  bool pass = false;
  bool flagged = false;
  double wall_ms = 0.0;
};

// Ten flips of a possibly unfair coin: posterior probability that the coin
// is the unfair one, exact and under a perturbed mixture (99 fair coins in
// place of 101).
ScenarioReport scenario_coin();

// Tail bound sup P[X >= a] over mean-constrained mixtures, solved through
// the one-measure finite program and through the nested Monte Carlo path.
ScenarioReport scenario_playdoh(double m, double a, std::uint64_t seed = 1);

// Same optimum q/a through the two deterministic reduction paths (direct
// finite program vs. outer program over the pushforward distribution).
ScenarioReport scenario_prior_bound(double q, double a, std::uint64_t seed = 1);

enum class PosteriorBrittleMode { Limit, FiniteDelta };

// Optimal posterior tail bound over the mean-constrained class after n
// observations; approaches 1 regardless of the prior value q/a. In
// FiniteDelta mode a decreasing-radius sweep is solved with carried-over
// witnesses and monotonicity is the pass criterion.
ScenarioReport scenario_posterior_brittle(double q, double a, int n,
                                          PosteriorBrittleMode mode,
                                          std::vector<double> deltas = {},
                                          std::uint64_t seed = 1);

// Closed forms for the band-constrained posterior curves.
double learning_curve(double alpha, double a, double m);
double gamma_curve(double gamma, int n);

ScenarioReport scenario_learning_curve(double alpha, double a, double m,
                                       std::uint64_t seed = 1);
ScenarioReport scenario_gamma_curve(double gamma, int n, double a, double m,
                                    std::uint64_t seed = 1);

// Two nearly indistinguishable model classes (total variation O(delta_c))
// with posterior means near 0.5 and above 0.95 respectively.
ScenarioReport scenario_model_ab(double delta = 0.005, double delta_c = 0.01,
                                 double gap = 1e-9, int theta_grid = 4001,
                                 int x_grid = 1201);

// k-moment class with the iteratively-uniform sampling distribution over
// moment vectors: certifies the brittleness conditions and reports the
// implied posterior range (0, 1) when n >= k+2 disjoint balls are present.
ScenarioReport scenario_moment_class(int k, int n, double delta = 0.01,
                                     std::uint64_t seed = 1);

struct ScenarioEntry {
  std::string name;
  std::string description;
  std::function<ScenarioReport(std::uint64_t seed)> run;
};

const std::vector<ScenarioEntry>& scenario_registry();

}  // namespace brittle
