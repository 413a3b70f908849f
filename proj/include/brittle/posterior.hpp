#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "brittle/measures.hpp"
#include "brittle/reduction.hpp"
#include "brittle/solver.hpp"

namespace brittle {

// Finitely supported prior over candidate measures.
struct DiscretePrior {
  std::vector<DiscreteMeasure> support;
  std::vector<double> weights;

  void validate() const;
};

// E[Phi | data] under a fixed discrete prior:
//   sum_i w_i Phi(mu_i) D(mu_i)[B] / sum_i w_i D(mu_i)[B].
// Throws "conditioning on null event" when the denominator vanishes.
double conditional_expectation(const DiscretePrior& prior,
                               const QuantityOfInterest& phi,
                               const Observation& obs);

// Optimal posterior bounds over a prior class: reduction + fractional solve.
SolveResult posterior_upper_bound(const QuantityOfInterest& phi,
                                  const PriorClassSpec& spec,
                                  const Observation& obs,
                                  const SolverConfig& config = {},
                                  PosteriorReductionOptions options = {});
SolveResult posterior_lower_bound(const QuantityOfInterest& phi,
                                  const PriorClassSpec& spec,
                                  const Observation& obs,
                                  const SolverConfig& config = {},
                                  PosteriorReductionOptions options = {});

// Level-value family lambda -> sup E_pi[(Phi - lambda) D] for the threshold
// characterisation of the posterior supremum; reuses witnesses across
// lambda evaluations.
std::function<double(double)> threshold_family(const QuantityOfInterest& phi,
                                               const PriorClassSpec& spec,
                                               const Observation& obs,
                                               const SolverConfig& config = {},
                                               PosteriorReductionOptions options = {});

// Six-way information chain. Sup over an empty family is -inf and inf over
// an empty family is +inf (sentinels preserved through serialisation).
struct BoundSandwich {
  double L_A = 0.0;
  double L_Pi = 0.0;
  double L_API = 0.0;
  double U_API = 0.0;
  double U_Pi = 0.0;
  double U_A = 0.0;

  bool ordered(double slack = 1e-9) const;
};

// Support discretisation used for the A-level and A_Pi-level ends of the
// sandwich and for the constructive brittleness witnesses.
struct GridSpec {
  int points = 51;
  // Mixture levels for two-atom grid measures.
  std::vector<double> pair_weights = {0.25, 0.5, 0.75};
};

BoundSandwich info_bound_sandwich(const QuantityOfInterest& phi,
                                  const PriorClassSpec& spec,
                                  const std::optional<Observation>& obs,
                                  const GridSpec& grid = {},
                                  const SolverConfig& config = {});

// Searches for a measure in the fiber {mu : Psi(mu) = q} supported on the
// allowed points (k+1 atoms for k moment components), with exact linear
// solves for the weights. Returns nullopt when no nonnegative support is
// found within n_trials random draws.
std::optional<DiscreteMeasure> fiber_witness(const MomentMap& psi,
                                             const std::vector<double>& q,
                                             const std::vector<double>& allowed,
                                             const Interval& support,
                                             const CounterRng& rng,
                                             std::uint64_t stream,
                                             int n_trials = 400);

struct BrittlenessVerdict {
  // Condition 1: every sampled fiber contains a grid measure whose data
  // probability is exactly zero.
  bool vanishing_data_probability = false;
  // Condition 2: with positive sampled frequency the fiber carries a
  // near-extremal measure with positive data probability.
  bool near_extreme_mass = false;
  bool holds = false;
  // Grid extremum of Phi over all measures; meaningful when holds is true.
  std::optional<double> implied_bound = std::nullopt;
  std::size_t n_samples = 0;
  std::size_t n_rejected = 0;
  std::size_t n_near_extreme = 0;
};

// Certifies the two brittleness conditions for the class Psi^{-1}(Q) at a
// discretised level. delta_check is the near-extremum margin.
BrittlenessVerdict brittleness_verdict(const QuantityOfInterest& phi,
                                       const MomentMap& psi,
                                       const MomentSampler& sampler,
                                       const Observation& obs,
                                       double delta_check,
                                       const GridSpec& grid,
                                       std::size_t n_samples, std::uint64_t seed,
                                       ObjectiveSense sense = ObjectiveSense::Sup);

// Monte Carlo lower bound U >= max_i Phi(section(q_i)) for a measurable
// section through the fibers; validates that the section stays on its fiber
// (within fiber_tol) and keeps positive data probability.
using MeasureSection =
    std::function<DiscreteMeasure(const std::vector<double>& q)>;

double essential_sup_bound(const QuantityOfInterest& phi, const MomentMap& psi,
                           const MomentSampler& sampler,
                           const MeasureSection& section, const Observation& obs,
                           std::size_t n_samples, std::uint64_t seed,
                           double fiber_tol = 1e-8);

}  // namespace brittle
