#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "brittle/measures.hpp"
#include "brittle/rng.hpp"

namespace brittle {

enum class ObjectiveSense { Sup, Inf };

enum class ProgramKind {
  PriorPrimary,         // finite program over one (n+1)-atom measure
  PositiveMeasure,      // unnormalised positive-measure program
  PosteriorFractional,  // mixture of measure variables with data reweighting
  LambdaThreshold       // level program E[(Phi - lambda) * D] over priors
};

// Two-sided multiplicative band on data probabilities relative to a
// reference measure (uniform on the support). Joint: the product over all
// balls stays within [1/param, param] of the reference product. PerBall:
// each ball mass stays within [1/param, param] of the reference ball mass.
struct DataProbabilityBand {
  enum class Mode { Joint, PerBall };
  Mode mode = Mode::Joint;
  double param = 1.0;  // alpha (joint) or gamma (per-ball), >= 1
};

// Prior class: all priors pi over measures on `support` whose expected
// generalised moments E_pi[Psi] lie in the target box, optionally
// intersected with a data-probability band.
struct PriorClassSpec {
  MomentMap moment_map;
  ConstraintSpec constraints;
  std::optional<DataProbabilityBand> band;
  Interval support{0.0, 1.0};

  void validate() const;
};

// One measure variable of a reduced program: `pinned_positions` atoms are
// frozen in place (observation ball centers), the remaining `free_atoms`
// positions are optimised. All atom weights are optimised.
struct MeasureLayout {
  std::vector<double> pinned_positions;
  int free_atoms = 0;

  int total_atoms() const {
    return static_cast<int>(pinned_positions.size()) + free_atoms;
  }
};

// Finite optimisation program produced by the reduction step and consumed
// by the solver. The objective and constraints are evaluated atom-wise via
// the stored callables; `describe()` yields a JSON-ish debug summary.
struct ReducedProgram {
  ProgramKind kind = ProgramKind::PriorPrimary;
  ObjectiveSense sense = ObjectiveSense::Sup;
  Interval support{0.0, 1.0};

  std::vector<MeasureLayout> measures;

  // Constraint features and target box (PriorPrimary / PosteriorFractional /
  // LambdaThreshold). For PositiveMeasure the rows are psi_1..psi_n with
  // target {0} and psi0 is the normalisation feature.
  MomentMap psi;
  ConstraintSpec targets;

  // Atom-level objective evaluator phi with Phi(mu) = E_mu[phi].
  std::function<double(double)> phi_atom;

  // PositiveMeasure only.
  std::function<double(double)> psi0;
  bool factorized = false;

  // PosteriorFractional / LambdaThreshold only.
  std::optional<Observation> observation;
  bool limit_mode = false;
  std::optional<DataProbabilityBand> band;

  // LambdaThreshold only: objective uses (phi - lambda) * D.
  double lambda = 0.0;

  // Candidate positions worth snapping to (QoI kinks, constraint-relevant
  // points, support endpoints); populated by the reduction step.
  std::vector<double> snap_points;

  int n_constraints() const { return static_cast<int>(targets.dimension()); }
  std::string describe() const;
};

// Reduction of sup/inf over the prior class of E_pi[Phi] to a single
// (n+1)-atom measure program (n = number of moment constraints).
ReducedProgram reduce_prior(const QuantityOfInterest& phi,
                            const PriorClassSpec& spec,
                            ObjectiveSense sense = ObjectiveSense::Sup);

struct PosteriorReductionOptions {
  int n_measures = 2;
  // Free atoms per measure in addition to constraint + observation slots.
  int extra_atoms = 2;
  // Replace shrinking observation balls by free ball-mass variables.
  bool limit_mode = false;
};

// Reduction of the optimal posterior value to a fractional program over
// `n_measures` measure variables, each carrying
// n_constraints + n_observations + 2 atoms by default.
ReducedProgram reduce_posterior(const QuantityOfInterest& phi,
                                const PriorClassSpec& spec,
                                const Observation& obs,
                                ObjectiveSense sense = ObjectiveSense::Sup,
                                PosteriorReductionOptions options = {});

// Reduction over unnormalised positive measures with E[psi0] = 1 and
// E[psi_k] = 0. When factor_phi is supplied the objective is declared to
// factor as Phi = psi0 * factor_phi and one atom fewer suffices
// (atom budget n+1 instead of n+2 for n zero-constraints); an explicit
// atom_budget overrides either default.
ReducedProgram reduce_positive(const QuantityOfInterest& phi,
                               std::function<double(double)> psi0,
                               std::vector<std::function<double(double)>> psis,
                               ObjectiveSense sense = ObjectiveSense::Sup,
                               std::optional<std::function<double(double)>> factor_phi = {},
                               Interval support = {0.0, 1.0},
                               int atom_budget = 0);

// Level program used by the lambda-threshold characterisation: same data as
// a posterior reduction, objective E_pi[(Phi - lambda) * D].
ReducedProgram reduce_lambda(const QuantityOfInterest& phi,
                             const PriorClassSpec& spec,
                             const Observation& obs, double lambda,
                             PosteriorReductionOptions options = {});

// Nested evaluation: Monte Carlo average of an inner fiber value over
// sampled moment vectors. The sampler sees a counter so that the estimate
// is a pure function of (seed, n_samples); the inner oracle returns nullopt
// for moment vectors it rejects as unattainable.
struct NestedEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_rejected = 0;
};

using MomentSampler =
    std::function<std::vector<double>(const CounterRng&, std::uint64_t counter)>;
using InnerOracle =
    std::function<std::optional<double>(const std::vector<double>& q)>;

NestedEstimate nested_prior_value(const MomentSampler& sampler,
                                  const InnerOracle& inner,
                                  std::size_t n_samples, std::uint64_t seed);

// Closed-form inner supremum sup { mu[X >= a] : E_mu[X] = q_prime } on [0,1]:
// min(1, q_prime / a).
double markov_inner_sup(double q_prime, double a);

}  // namespace brittle
