#include "brittle/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace brittle {

namespace {

const char* kind_name(ProgramKind k) {
  switch (k) {
    case ProgramKind::PriorPrimary: return "prior-primary";
    case ProgramKind::PositiveMeasure: return "positive-measure";
    case ProgramKind::PosteriorFractional: return "posterior-fractional";
    case ProgramKind::LambdaThreshold: return "lambda-threshold";
  }
  return "?";
}

// Positions at which the objective or the constraints have kinks; the solver
// polishes candidate optima by trying these exactly.
std::vector<double> collect_snap_points(const QuantityOfInterest& phi,
                                        const PriorClassSpec& spec,
                                        const Observation* obs) {
  std::vector<double> pts{spec.support.lo, spec.support.hi};
  auto push = [&](double x) {
    if (std::isfinite(x) && spec.support.contains(x)) pts.push_back(x);
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
  for (std::size_t i = 0; i < spec.moment_map.dimension(); ++i) {
    const auto& c = spec.moment_map.component(i);
    if (c.kind == MomentMap::ComponentKind::Threshold) push(c.p0);
    if (c.kind == MomentMap::ComponentKind::Ball) {
      push(c.p0 - c.p1);
      push(c.p0);
      push(c.p0 + c.p1);
    }
  }
  for (const Interval& t : spec.constraints.targets) {
    // Useful for identity-like moment maps (mean targets).
    push(t.lo);
    push(t.hi);
  }
  if (obs != nullptr) {
    for (double c : obs->centers) {
      push(c - obs->radius);
      push(c);
      push(c + obs->radius);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-15; }),
            pts.end());
  return pts;
}

void require_atom_evaluator(const QuantityOfInterest& phi) {
  if (!phi.has_atom_evaluator()) {
    throw std::invalid_argument(
        "reduction: non-affine quantity of interest requires nested path");
  }
}

}  // namespace

void PriorClassSpec::validate() const {
  if (support.empty()) {
    throw std::invalid_argument("PriorClassSpec: empty support");
  }
  if (constraints.dimension() != moment_map.dimension()) {
    throw std::invalid_argument(
        "PriorClassSpec: constraint/moment dimension mismatch");
  }
  constraints.validate();
  if (auto bad = moment_map.unbounded_component(support)) {
    throw std::invalid_argument("PriorClassSpec: moment component " +
                                std::to_string(*bad) +
                                " is unbounded on the support");
  }
  if (band && band->param < 1.0) {
    throw std::invalid_argument(
        "PriorClassSpec: band parameter must be >= 1");
  }
}

std::string ReducedProgram::describe() const {
  std::ostringstream os;
  os << "{kind: " << kind_name(kind)
     << ", sense: " << (sense == ObjectiveSense::Sup ? "sup" : "inf")
     << ", measures: " << measures.size() << ", atoms: [";
  for (std::size_t j = 0; j < measures.size(); ++j) {
    os << (j ? ", " : "") << measures[j].total_atoms();
  }
  os << "], constraints: " << targets.dimension();
  if (observation) os << ", observations: " << observation->count();
  if (limit_mode) os << ", limit-mode";
  if (band) {
    os << ", band: " << (band->mode == DataProbabilityBand::Mode::Joint
                             ? "joint" : "per-ball")
       << "(" << band->param << ")";
  }
  os << "}";
  return os.str();
}

ReducedProgram reduce_prior(const QuantityOfInterest& phi,
                            const PriorClassSpec& spec, ObjectiveSense sense) {
  spec.validate();
  require_atom_evaluator(phi);

  ReducedProgram prog;
  prog.kind = ProgramKind::PriorPrimary;
  prog.sense = sense;
  prog.support = spec.support;
  prog.psi = spec.moment_map;
  prog.targets = spec.constraints;
  prog.phi_atom = [phi](double x) { return phi.atom_value(x); };

  MeasureLayout layout;
  layout.free_atoms = static_cast<int>(spec.constraints.dimension()) + 1;
  prog.measures.push_back(layout);
  prog.snap_points = collect_snap_points(phi, spec, nullptr);
  return prog;
}

ReducedProgram reduce_posterior(const QuantityOfInterest& phi,
                                const PriorClassSpec& spec,
                                const Observation& obs, ObjectiveSense sense,
                                PosteriorReductionOptions options) {
  spec.validate();
  require_atom_evaluator(phi);
  if (options.n_measures < 1) {
    throw std::invalid_argument("reduce_posterior: need at least one measure");
  }

  ReducedProgram prog;
  prog.kind = ProgramKind::PosteriorFractional;
  prog.sense = sense;
  prog.support = spec.support;
  prog.psi = spec.moment_map;
  prog.targets = spec.constraints;
  prog.phi_atom = [phi](double x) { return phi.atom_value(x); };
  prog.observation = obs;
  prog.limit_mode = options.limit_mode;
  prog.band = spec.band;

  MeasureLayout layout;
  layout.pinned_positions = obs.centers;
  layout.free_atoms = static_cast<int>(spec.constraints.dimension()) +
                      options.extra_atoms;
  for (int j = 0; j < options.n_measures; ++j) prog.measures.push_back(layout);
  prog.snap_points = collect_snap_points(phi, spec, &obs);
  return prog;
}

ReducedProgram reduce_positive(const QuantityOfInterest& phi,
                               std::function<double(double)> psi0,
                               std::vector<std::function<double(double)>> psis,
                               ObjectiveSense sense,
                               std::optional<std::function<double(double)>> factor_phi,
                               Interval support, int atom_budget) {
  if (!psi0) throw std::invalid_argument("reduce_positive: null psi0");
  if (!factor_phi) require_atom_evaluator(phi);

  // psi0 must be nonnegative on the support; checked on a sample grid.
  const int samples = 257;
  for (int s = 0; s < samples; ++s) {
    const double t = static_cast<double>(s) / (samples - 1);
    const double x = support.lo + t * support.width();
    const double v = psi0(x);
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(
          "reduce_positive: psi0 negative or non-finite at x = " +
          std::to_string(x));
    }
  }

  ReducedProgram prog;
  prog.kind = ProgramKind::PositiveMeasure;
  prog.sense = sense;
  prog.support = support;
  prog.psi0 = std::move(psi0);
  prog.factorized = factor_phi.has_value();
  const auto n = psis.size();
  for (auto& f : psis) {
    if (!f) throw std::invalid_argument("reduce_positive: null psi component");
    prog.psi.add_custom("psi", std::move(f));
  }
  prog.targets.targets.assign(n, Interval{0.0, 0.0});

  if (prog.factorized) {
    auto p0 = prog.psi0;
    auto fp = *factor_phi;
    prog.phi_atom = [p0, fp](double x) { return p0(x) * fp(x); };
  } else {
    prog.phi_atom = [phi](double x) { return phi.atom_value(x); };
  }

  MeasureLayout layout;
  if (atom_budget > 0) {
    layout.free_atoms = atom_budget;
  } else {
    // One equality row per psi component plus the psi0 normalisation; the
    // factorised form saves one atom via the change of measure psi0 d mu.
    layout.free_atoms = static_cast<int>(n) + (prog.factorized ? 1 : 2);
  }
  prog.measures.push_back(layout);
  prog.snap_points = {support.lo, support.hi};
  if (phi.kind() == QuantityOfInterest::Kind::TailProbability &&
      support.contains(phi.tail_threshold())) {
    prog.snap_points.push_back(phi.tail_threshold());
  }
  std::sort(prog.snap_points.begin(), prog.snap_points.end());
  return prog;
}

ReducedProgram reduce_lambda(const QuantityOfInterest& phi,
                             const PriorClassSpec& spec, const Observation& obs,
                             double lambda, PosteriorReductionOptions options) {
  ReducedProgram prog = reduce_posterior(phi, spec, obs, ObjectiveSense::Sup,
                                         options);
  prog.kind = ProgramKind::LambdaThreshold;
  prog.lambda = lambda;
  return prog;
}

NestedEstimate nested_prior_value(const MomentSampler& sampler,
                                  const InnerOracle& inner,
                                  std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) {
    throw std::invalid_argument("nested_prior_value: n_samples must be > 0");
  }
  CounterRng rng(seed);
  NestedEstimate est;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::vector<double> q = sampler(rng, i);
    const std::optional<double> v = q.empty() ? std::nullopt : inner(q);
    if (!v) {
      ++est.n_rejected;
      continue;
    }
    sum += *v;
    sum_sq += *v * *v;
    ++kept;
  }
  est.n_samples = n_samples;
  if (est.n_rejected * 2 > n_samples) {
    throw std::runtime_error("nested_prior_value: sampler leaves moment body");
  }
  est.value = sum / static_cast<double>(kept);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(kept) - est.value * est.value);
  est.std_error = std::sqrt(var / static_cast<double>(kept));
  return est;
}

double markov_inner_sup(double q_prime, double a) {
  if (!(q_prime >= 0.0 && q_prime <= 1.0)) {
    throw std::invalid_argument("markov_inner_sup: q_prime must lie in [0,1]");
  }
  if (!(a > 0.0 && a < 1.0)) {
    throw std::invalid_argument("markov_inner_sup: a must lie in (0,1)");
  }
  return std::min(1.0, q_prime / a);
}

}  // namespace brittle
