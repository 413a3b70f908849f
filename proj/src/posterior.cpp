#include "brittle/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace brittle {

namespace {

constexpr double kDenominatorFloor = 1e-300;
constexpr double kFiberTol = 1e-8;

const double kInf = std::numeric_limits<double>::infinity();

// Gaussian elimination for the exact fiber-weight solves.
bool solve_square(std::vector<std::vector<double>> a, std::vector<double>& b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-12) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c2 = col; c2 < n; ++c2) a[r][c2] -= f * a[col][c2];
      b[r] -= f * b[col];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double s = b[col];
    for (int c2 = col + 1; c2 < n; ++c2) s -= a[col][c2] * b[c2];
    b[col] = s / a[col][col];
  }
  return true;
}

std::vector<double> grid_points(const Interval& support, const GridSpec& grid,
                                const QuantityOfInterest& phi) {
  std::vector<double> pts;
  const int n = std::max(2, grid.points);
  pts.reserve(static_cast<std::size_t>(n) + 4);
  for (int i = 0; i < n; ++i) {
    pts.push_back(support.lo +
                  support.width() * static_cast<double>(i) / (n - 1));
  }
  auto push = [&](double x) {
    if (std::isfinite(x) && support.contains(x)) pts.push_back(x);
  };
  if (phi.kind() == QuantityOfInterest::Kind::TailProbability) {
    push(phi.tail_threshold());
  }
  if (phi.kind() == QuantityOfInterest::Kind::SetProbability) {
    for (const Interval& iv : phi.set()) {
      push(iv.lo);
      push(iv.hi);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-15; }),
            pts.end());
  return pts;
}

// Grid family: Dirac measures at the grid points, two-atom mixtures at the
// configured weight levels, and (for one-dimensional moment maps) two-atom
// measures hitting the target value exactly.
std::vector<DiscreteMeasure> grid_family(const std::vector<double>& pts,
                                         const PriorClassSpec& spec,
                                         const GridSpec& grid) {
  std::vector<DiscreteMeasure> family;
  for (double x : pts) {
    family.push_back(DiscreteMeasure::dirac(x, spec.support));
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      for (double w : grid.pair_weights) {
        family.emplace_back(std::vector<double>{pts[i], pts[j]},
                            std::vector<double>{w, 1.0 - w}, spec.support);
      }
    }
  }
  if (spec.moment_map.dimension() == 1) {
    const Interval target = spec.constraints.targets[0];
    const double t = std::isfinite(target.lo) ? target.lo : target.hi;
    if (std::isfinite(t)) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
          const double vi = spec.moment_map.eval(0, pts[i]);
          const double vj = spec.moment_map.eval(0, pts[j]);
          if ((vi - t) * (vj - t) > 0.0 || vi == vj) continue;
          const double w = (vj - t) / (vj - vi);
          if (w < 0.0 || w > 1.0) continue;
          family.emplace_back(std::vector<double>{pts[i], pts[j]},
                              std::vector<double>{w, 1.0 - w}, spec.support);
        }
      }
    }
  }
  return family;
}

}  // namespace

void DiscretePrior::validate() const {
  if (support.empty() || support.size() != weights.size()) {
    throw std::invalid_argument("DiscretePrior: support/weight size mismatch");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("DiscretePrior: negative weight");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("DiscretePrior: weights must sum to 1");
  }
}

double conditional_expectation(const DiscretePrior& prior,
                               const QuantityOfInterest& phi,
                               const Observation& obs) {
  // Unnormalised weights are accepted: the ratio below is homogeneous of
  // degree zero in the weights, so rescaling them is an exact no-op.
  if (prior.support.empty() || prior.support.size() != prior.weights.size()) {
    throw std::invalid_argument("DiscretePrior: support/weight size mismatch");
  }
  for (double w : prior.weights) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("DiscretePrior: negative weight");
    }
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < prior.support.size(); ++i) {
    const double dp = data_probability(prior.support[i], obs);
    if (dp == 0.0) continue;
    num += prior.weights[i] * phi.evaluate(prior.support[i]) * dp;
    den += prior.weights[i] * dp;
  }
  if (den < kDenominatorFloor) {
    throw std::runtime_error("conditioning on null event");
  }
  return num / den;
}

SolveResult posterior_upper_bound(const QuantityOfInterest& phi,
                                  const PriorClassSpec& spec,
                                  const Observation& obs,
                                  const SolverConfig& config,
                                  PosteriorReductionOptions options) {
  const ReducedProgram prog =
      reduce_posterior(phi, spec, obs, ObjectiveSense::Sup, options);
  return solve_fractional(prog, config);
}

SolveResult posterior_lower_bound(const QuantityOfInterest& phi,
                                  const PriorClassSpec& spec,
                                  const Observation& obs,
                                  const SolverConfig& config,
                                  PosteriorReductionOptions options) {
  const ReducedProgram prog =
      reduce_posterior(phi, spec, obs, ObjectiveSense::Inf, options);
  return solve_fractional(prog, config);
}

std::function<double(double)> threshold_family(const QuantityOfInterest& phi,
                                               const PriorClassSpec& spec,
                                               const Observation& obs,
                                               const SolverConfig& config,
                                               PosteriorReductionOptions options) {
  // Witnesses found at one level seed the next; the state is shared across
  // copies of the returned callable.
  auto carry = std::make_shared<std::vector<WarmStart>>();
  return [=](double lambda) {
    const ReducedProgram prog = reduce_lambda(phi, spec, obs, lambda, options);
    SolverConfig cfg = config;
    for (const WarmStart& ws : *carry) cfg.warm_starts.push_back(ws);
    const SolveResult res = solve(prog, cfg);
    if (res.status == SolveStatus::Infeasible) return -1.0;
    if (!res.witness.empty()) {
      if (carry->empty()) carry->emplace_back();
      carry->front().measures = res.witness;
    }
    return res.value;
  };
}

bool BoundSandwich::ordered(double slack) const {
  const double chain[6] = {L_A, L_Pi, L_API, U_API, U_Pi, U_A};
  // Sentinel-valued middle entries (empty families) participate via the
  // usual conventions: sup over empty = -inf, inf over empty = +inf. The
  // chain property is only required between comparable finite entries and
  // around the empty middle in the order L_A <= L_Pi, U_Pi <= U_A, and for
  // the middle when present.
  auto le = [slack](double a, double b) {
    if (a == -kInf || b == kInf) return true;
    if (a == kInf) return b == kInf;
    if (b == -kInf) return a == -kInf;
    return a <= b + slack;
  };
  const bool middle_empty = (L_API == kInf) && (U_API == -kInf);
  if (middle_empty) {
    return le(chain[0], chain[1]) && le(chain[1], chain[4]) &&
           le(chain[4], chain[5]);
  }
  for (int i = 0; i + 1 < 6; ++i) {
    if (!le(chain[i], chain[i + 1])) return false;
  }
  return true;
}

BoundSandwich info_bound_sandwich(const QuantityOfInterest& phi,
                                  const PriorClassSpec& spec,
                                  const std::optional<Observation>& obs,
                                  const GridSpec& grid,
                                  const SolverConfig& config) {
  spec.validate();
  BoundSandwich s;
  const std::vector<double> pts = grid_points(spec.support, grid, phi);
  const std::vector<DiscreteMeasure> family = grid_family(pts, spec, grid);

  s.U_A = -kInf;
  s.L_A = kInf;
  s.U_API = -kInf;
  s.L_API = kInf;
  const DiscreteMeasure* best_feasible = nullptr;
  const DiscreteMeasure* worst_feasible = nullptr;
  for (const DiscreteMeasure& mu : family) {
    const double v = phi.evaluate(mu);
    s.U_A = std::max(s.U_A, v);
    s.L_A = std::min(s.L_A, v);
    const std::vector<double> moments = spec.moment_map.evaluate(mu);
    if (!spec.constraints.satisfied(moments, kFiberTol)) continue;
    if (obs && data_probability(mu, *obs) <= 0.0) continue;
    if (v > s.U_API) {
      s.U_API = v;
      best_feasible = &mu;
    }
    if (v < s.L_API) {
      s.L_API = v;
      worst_feasible = &mu;
    }
  }

  SolverConfig cfg = config;
  if (best_feasible != nullptr) {
    cfg.warm_starts.insert(cfg.warm_starts.begin(), WarmStart{{*best_feasible}});
  }
  if (worst_feasible != nullptr) {
    cfg.warm_starts.insert(cfg.warm_starts.begin(),
                           WarmStart{{*worst_feasible}});
  }

  auto run = [&](ObjectiveSense sense) -> double {
    SolveResult res;
    try {
      if (obs) {
        res = solve_fractional(reduce_posterior(phi, spec, *obs, sense), cfg);
      } else {
        res = solve(reduce_prior(phi, spec, sense), cfg);
      }
    } catch (const std::runtime_error&) {
      return sense == ObjectiveSense::Sup ? -kInf : kInf;
    }
    if (res.status == SolveStatus::Infeasible) {
      return sense == ObjectiveSense::Sup ? -kInf : kInf;
    }
    return res.value;
  };
  s.U_Pi = run(ObjectiveSense::Sup);
  s.L_Pi = run(ObjectiveSense::Inf);

  if (!s.ordered()) {
    throw std::logic_error("info_bound_sandwich: ordering post-check failed");
  }
  return s;
}

std::optional<DiscreteMeasure> fiber_witness(const MomentMap& psi,
                                             const std::vector<double>& q,
                                             const std::vector<double>& allowed,
                                             const Interval& support,
                                             const CounterRng& rng,
                                             std::uint64_t stream, int n_trials) {
  const std::size_t k = psi.dimension();
  if (q.size() != k) {
    throw std::invalid_argument("fiber_witness: moment dimension mismatch");
  }
  const std::size_t m = k + 1;
  if (allowed.size() < m) return std::nullopt;
  const CounterRng local = rng.substream(stream);

  std::vector<std::size_t> idx(m);
  std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
  std::vector<double> b(m, 0.0);

  for (int trial = 0; trial < n_trials; ++trial) {
    // Draw m distinct indices.
    bool distinct = true;
    for (std::size_t i = 0; i < m; ++i) {
      idx[i] = static_cast<std::size_t>(
          local.uniform(static_cast<std::uint64_t>(trial) * m + i) *
          static_cast<double>(allowed.size()));
      idx[i] = std::min(idx[i], allowed.size() - 1);
      for (std::size_t j2 = 0; j2 < i; ++j2) {
        if (idx[j2] == idx[i]) distinct = false;
      }
    }
    if (!distinct) continue;
    for (std::size_t j = 0; j < m; ++j) {
      a[0][j] = 1.0;
      for (std::size_t r = 0; r < k; ++r) {
        a[r + 1][j] = psi.eval(r, allowed[idx[j]]);
      }
    }
    b[0] = 1.0;
    for (std::size_t r = 0; r < k; ++r) b[r + 1] = q[r];
    std::vector<double> w = b;
    if (!solve_square(a, w)) continue;
    bool ok = true;
    for (double wi : w) {
      if (wi < -1e-12) ok = false;
    }
    if (!ok) continue;
    std::vector<double> atoms(m);
    for (std::size_t j = 0; j < m; ++j) atoms[j] = allowed[idx[j]];
    for (double& wi : w) wi = std::max(wi, 0.0);
    DiscreteMeasure mu(atoms, w, support);
    const std::vector<double> got = psi.evaluate(mu);
    double err = 0.0;
    for (std::size_t r = 0; r < k; ++r) err = std::max(err, std::abs(got[r] - q[r]));
    if (err <= kFiberTol) return mu;
  }
  return std::nullopt;
}

namespace {

// Near-extremal fiber measure with positive data probability: tiny mass on
// every observation ball center plus an exact-moment completion biased
// toward the extremum of phi.
std::optional<DiscreteMeasure> near_extreme_fiber_witness(
    const QuantityOfInterest& phi, const MomentMap& psi,
    const std::vector<double>& q, const std::vector<double>& pts,
    const Observation& obs, const Interval& support, ObjectiveSense sense,
    const CounterRng& rng, std::uint64_t stream, int n_trials) {
  const std::size_t k = psi.dimension();
  const std::size_t m = k + 1;
  const double eta = 1e-6;

  // Residual moments after placing eta on each distinct ball center.
  std::vector<double> centers = obs.centers;
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  std::vector<double> q_res = q;
  double mass_res = 1.0;
  for (double c : centers) {
    mass_res -= eta;
    for (std::size_t r = 0; r < k; ++r) q_res[r] -= eta * psi.eval(r, c);
  }
  if (mass_res <= 0.0) return std::nullopt;

  // Candidate completion points sorted toward the extremum of phi.
  std::vector<double> ranked = pts;
  const double sgn = sense == ObjectiveSense::Sup ? 1.0 : -1.0;
  std::stable_sort(ranked.begin(), ranked.end(), [&](double a, double b) {
    return sgn * phi.atom_value(a) > sgn * phi.atom_value(b);
  });
  if (ranked.size() < m) return std::nullopt;

  const CounterRng local = rng.substream(stream);
  std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
  std::vector<std::size_t> idx(m);
  for (int trial = 0; trial < n_trials; ++trial) {
    // Always include the current best-ranked point, fill the rest randomly
    // with a preference for the top of the ranking.
    idx[0] = static_cast<std::size_t>(trial) % std::max<std::size_t>(1, m);
    bool distinct = true;
    for (std::size_t i = 1; i < m; ++i) {
      const double u = local.uniform(static_cast<std::uint64_t>(trial) * m + i);
      idx[i] = static_cast<std::size_t>(u * u * static_cast<double>(ranked.size()));
      idx[i] = std::min(idx[i], ranked.size() - 1);
      for (std::size_t j2 = 0; j2 < i; ++j2) {
        if (idx[j2] == idx[i]) distinct = false;
      }
    }
    if (!distinct) continue;
    for (std::size_t j = 0; j < m; ++j) {
      a[0][j] = 1.0;
      for (std::size_t r = 0; r < k; ++r) {
        a[r + 1][j] = psi.eval(r, ranked[idx[j]]);
      }
    }
    std::vector<double> w(m, 0.0);
    w[0] = mass_res;
    for (std::size_t r = 0; r < k; ++r) w[r + 1] = q_res[r];
    if (!solve_square(a, w)) continue;
    bool ok = true;
    for (double wi : w) {
      if (wi < -1e-12) ok = false;
    }
    if (!ok) continue;

    std::vector<double> atoms;
    std::vector<double> weights;
    for (double c : centers) {
      atoms.push_back(c);
      weights.push_back(eta);
    }
    for (std::size_t j = 0; j < m; ++j) {
      atoms.push_back(ranked[idx[j]]);
      weights.push_back(std::max(w[j], 0.0));
    }
    DiscreteMeasure mu(atoms, weights, support);
    const std::vector<double> got = psi.evaluate(mu);
    double err = 0.0;
    for (std::size_t r = 0; r < k; ++r) err = std::max(err, std::abs(got[r] - q[r]));
    if (err > kFiberTol) continue;
    if (data_probability(mu, obs) <= 0.0) continue;
    return mu;
  }
  return std::nullopt;
}

}  // namespace

BrittlenessVerdict brittleness_verdict(const QuantityOfInterest& phi,
                                       const MomentMap& psi,
                                       const MomentSampler& sampler,
                                       const Observation& obs,
                                       double delta_check, const GridSpec& grid,
                                       std::size_t n_samples, std::uint64_t seed,
                                       ObjectiveSense sense) {
  if (!phi.has_atom_evaluator()) {
    throw std::invalid_argument(
        "brittleness_verdict: quantity of interest requires an atom evaluator");
  }
  if (!(delta_check > 0.0)) {
    throw std::invalid_argument("brittleness_verdict: delta_check must be > 0");
  }
  const Interval support{0.0, 1.0};
  const std::vector<double> pts = grid_points(support, grid, phi);
  std::vector<double> off_ball;
  for (double x : pts) {
    if (!obs.in_some_ball(x)) off_ball.push_back(x);
  }

  const double sgn = sense == ObjectiveSense::Sup ? 1.0 : -1.0;
  double extreme = -kInf;
  for (double x : pts) extreme = std::max(extreme, sgn * phi.atom_value(x));
  extreme *= sgn;

  BrittlenessVerdict verdict;
  verdict.n_samples = n_samples;
  CounterRng rng(seed);
  std::size_t zero_witnessed = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::vector<double> q = sampler(rng, i);
    if (q.size() != psi.dimension()) {
      // Samplers signal an unattainable draw with a malformed vector.
      ++verdict.n_rejected;
      continue;
    }
    // A witness supported off every ball certifies that this fiber reaches
    // data probability exactly zero. When none exists the sample still
    // counts against condition 1 provided the fiber is nonempty at grid
    // level; only an empty grid fiber is a rejection.
    const auto w1 = fiber_witness(psi, q, off_ball, support, rng,
                                  3 * i + 1, 1500);
    if (w1 && data_probability(*w1, obs) == 0.0) {
      ++zero_witnessed;
    } else if (!fiber_witness(psi, q, pts, support, rng, 3 * i + 3, 600)) {
      ++verdict.n_rejected;
      continue;
    }
    const auto w2 = near_extreme_fiber_witness(phi, psi, q, pts, obs, support,
                                               sense, rng, 3 * i + 2, 200);
    if (w2) {
      const double v = phi.evaluate(*w2);
      if (sgn * v > sgn * extreme - delta_check) ++verdict.n_near_extreme;
    }
  }
  if (verdict.n_rejected * 2 > n_samples) {
    throw std::runtime_error("brittleness_verdict: grid too coarse");
  }
  const std::size_t kept = n_samples - verdict.n_rejected;
  verdict.vanishing_data_probability = kept > 0 && zero_witnessed == kept;
  verdict.near_extreme_mass = verdict.n_near_extreme > 0;
  verdict.holds =
      verdict.vanishing_data_probability && verdict.near_extreme_mass;
  if (verdict.holds) verdict.implied_bound = extreme;
  return verdict;
}

double essential_sup_bound(const QuantityOfInterest& phi, const MomentMap& psi,
                           const MomentSampler& sampler,
                           const MeasureSection& section, const Observation& obs,
                           std::size_t n_samples, std::uint64_t seed,
                           double fiber_tol) {
  CounterRng rng(seed);
  double best = -kInf;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::vector<double> q = sampler(rng, i);
    const DiscreteMeasure mu = section(q);
    const std::vector<double> got = psi.evaluate(mu);
    for (std::size_t r = 0; r < q.size(); ++r) {
      if (std::abs(got[r] - q[r]) > fiber_tol) {
        std::ostringstream os;
        os << "essential_sup_bound: section leaves the fiber at q = (";
        for (std::size_t t = 0; t < q.size(); ++t) os << (t ? ", " : "") << q[t];
        os << ")";
        throw std::invalid_argument(os.str());
      }
    }
    if (data_probability(mu, obs) <= 0.0) {
      std::ostringstream os;
      os << "essential_sup_bound: section has zero data probability at q = (";
      for (std::size_t t = 0; t < q.size(); ++t) os << (t ? ", " : "") << q[t];
      os << ")";
      throw std::invalid_argument(os.str());
    }
    best = std::max(best, phi.evaluate(mu));
  }
  return best;
}

}  // namespace brittle
