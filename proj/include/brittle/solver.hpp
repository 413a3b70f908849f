#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "brittle/reduction.hpp"

namespace brittle {

enum class SolveStatus { Converged, MaxIter, Infeasible };

// Optional initial point: one measure per measure variable of the program.
// Atoms matching a pinned position are routed to that slot; remaining atoms
// fill free slots. Warm starts that do not fit the layout are skipped.
struct WarmStart {
  std::vector<DiscreteMeasure> measures;
};

struct SolverConfig {
  int restarts = 32;
  int max_iters = 2000;
  double step_tol = 1e-10;
  double constraint_tol = 1e-8;
  double fd_step = 1e-6;  // central finite-difference step
  double penalty_initial = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e8;
  std::uint64_t seed = 0;
  std::vector<WarmStart> warm_starts;
};

struct SolveResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<DiscreteMeasure> witness;
  // Prior weights over the witness measures (sums to 1); {1} for
  // single-measure kinds.
  std::vector<double> witness_weights;
  // Data probability per witness measure: 1 for prior kinds, the product of
  // ball masses (or the band ratio variable in limit mode) otherwise.
  std::vector<double> witness_denominators;
  SolveStatus status = SolveStatus::Infeasible;
  int restarts_used = 0;
  double constraint_residual = std::numeric_limits<double>::infinity();
  bool near_singular = false;
};

// Deterministic multi-start solve of a reduced program. The returned value
// is a certified bound in the direction of optimisation only (a feasible
// witness evaluates to it); no claim is made about global optimality.
SolveResult solve(const ReducedProgram& program, const SolverConfig& config = {});

// Same as solve() but restricted to fractional (posterior) programs; throws
// "conditioning on null event" when every restart ends with all data
// probabilities at zero.
SolveResult solve_fractional(const ReducedProgram& program,
                             const SolverConfig& config = {});

// Supremum of { lambda in [lo, hi] : family_value(lambda) > 0 } by bisection.
// Requires family_value(hi) <= 0; family_value must be nonincreasing.
double lambda_threshold(const std::function<double(double)>& family_value,
                        double lo, double hi, double tol = 2.5e-5);

// Recomputes the objective at the witness through the measures module
// (used by the replay invariant tests).
double replay_value(const ReducedProgram& program, const SolveResult& result);

}  // namespace brittle
