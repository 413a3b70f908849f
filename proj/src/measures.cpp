#include "brittle/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "brittle/rng.hpp"

namespace brittle {

bool interval_union_contains(const IntervalUnion& set, double x) {
  return std::any_of(set.begin(), set.end(),
                     [x](const Interval& iv) { return iv.contains(x); });
}

std::vector<double> rd_sequence_point(std::size_t dim, std::uint64_t index,
                                      double offset01) {
  // Generalised golden-ratio constants: phi_d is the unique positive root of
  // x^(d+1) = x + 1; coordinates step by the inverse powers of phi_d.
  double phi = 2.0;
  for (int it = 0; it < 64; ++it) {
    phi = std::pow(1.0 + phi, 1.0 / (static_cast<double>(dim) + 1.0));
  }
  std::vector<double> p(dim);
  double alpha = 1.0;
  for (std::size_t d = 0; d < dim; ++d) {
    alpha /= phi;
    double v = offset01 + alpha * static_cast<double>(index + 1);
    p[d] = v - std::floor(v);
  }
  return p;
}

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::vector<double> atoms,
                                 std::vector<double> weights, Interval support,
                                 bool positive)
    : atoms_(std::move(atoms)),
      weights_(std::move(weights)),
      support_(support),
      positive_(positive) {
  if (support_.empty()) {
    throw std::invalid_argument("DiscreteMeasure: empty support interval");
  }
  if (atoms_.empty()) {
    throw std::invalid_argument("DiscreteMeasure: at least one atom required");
  }
  if (atoms_.size() != weights_.size()) {
    throw std::invalid_argument("DiscreteMeasure: atom/weight size mismatch");
  }
  for (double x : atoms_) {
    if (!std::isfinite(x) || !support_.contains(x)) {
      throw std::invalid_argument("DiscreteMeasure: atom outside support");
    }
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("DiscreteMeasure: negative or non-finite weight");
    }
    sum += w;
  }
  if (!positive_) {
    const double drift = std::abs(sum - 1.0);
    if (drift > 1e-9) {
      throw std::invalid_argument(
          "DiscreteMeasure: weights sum to " + std::to_string(sum) +
          ", drift exceeds renormalisation tolerance 1e-9");
    }
    if (drift > 1e-12) {
      for (double& w : weights_) w /= sum;
    }
  }
}

DiscreteMeasure DiscreteMeasure::dirac(double x, Interval support) {
  return DiscreteMeasure({x}, {1.0}, support);
}

double DiscreteMeasure::total_mass() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

double DiscreteMeasure::mass(const Interval& set) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (set.contains(atoms_[i])) s += weights_[i];
  }
  return s;
}

double DiscreteMeasure::mass(const IntervalUnion& set) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (interval_union_contains(set, atoms_[i])) s += weights_[i];
  }
  return s;
}

double DiscreteMeasure::ball_mass(double center, double radius) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (std::abs(atoms_[i] - center) < radius) s += weights_[i];
  }
  return s;
}

double DiscreteMeasure::expectation(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    s += weights_[i] * f(atoms_[i]);
  }
  return s;
}

double DiscreteMeasure::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) s += weights_[i] * atoms_[i];
  return s;
}

double DiscreteMeasure::moment(int k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    s += weights_[i] * std::pow(atoms_[i], k);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Quadrature and densities

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double fa, double m, double fm, double b, double fb,
                        double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
  if (!(b > a)) return 0.0;
  // Composite seed panels stabilise the error estimate for peaked integrands.
  const int panels = 8;
  const double h = (b - a) / panels;
  // First pass for a magnitude estimate.
  double rough = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    rough += std::abs(f(lo + 0.5 * h)) * h;
  }
  const double tol = std::max(rough * rel_tol, 1e-14) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    const double hi = lo + h;
    const double m = 0.5 * (lo + hi);
    const double fa = f(lo), fm = f(m), fb = f(hi);
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += adaptive_simpson(f, lo, fa, m, fm, hi, fb, whole, tol, 40);
  }
  return total;
}

double Density::mass(const Interval& set) const {
  const double lo = std::max(set.lo, support.lo);
  const double hi = std::min(set.hi, support.hi);
  if (!(hi > lo)) return 0.0;
  return integrate(pdf, lo, hi);
}

double Density::ball_mass(double center, double radius) const {
  return mass({center - radius, center + radius});
}

double Density::expectation(const std::function<double(double)>& f) const {
  auto g = [&](double x) { return pdf(x) * f(x); };
  return integrate(g, support.lo, support.hi);
}

// ---------------------------------------------------------------------------
// MomentMap

MomentMap& MomentMap::add_power(int k) {
  if (k < 1) throw std::invalid_argument("MomentMap: power exponent must be >= 1");
  Component c;
  c.kind = ComponentKind::Power;
  c.p0 = static_cast<double>(k);
  c.name = "x^" + std::to_string(k);
  components_.push_back(std::move(c));
  return *this;
}

MomentMap& MomentMap::add_threshold(double a) {
  Component c;
  c.kind = ComponentKind::Threshold;
  c.p0 = a;
  c.name = "1{x>=" + std::to_string(a) + "}";
  components_.push_back(std::move(c));
  return *this;
}

MomentMap& MomentMap::add_ball(double center, double radius) {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("MomentMap: ball radius must be positive");
  }
  Component c;
  c.kind = ComponentKind::Ball;
  c.p0 = center;
  c.p1 = radius;
  c.name = "ball(" + std::to_string(center) + "," + std::to_string(radius) + ")";
  components_.push_back(std::move(c));
  return *this;
}

MomentMap& MomentMap::add_custom(std::string name,
                                 std::function<double(double)> fn) {
  if (!fn) throw std::invalid_argument("MomentMap: null custom component");
  Component c;
  c.kind = ComponentKind::Custom;
  c.fn = std::move(fn);
  c.name = std::move(name);
  components_.push_back(std::move(c));
  return *this;
}

MomentMap MomentMap::powers(int k_max) {
  MomentMap m;
  for (int k = 1; k <= k_max; ++k) m.add_power(k);
  return m;
}

double MomentMap::eval(std::size_t i, double x) const {
  const Component& c = components_.at(i);
  switch (c.kind) {
    case ComponentKind::Power:
      return std::pow(x, c.p0);
    case ComponentKind::Threshold:
      return x >= c.p0 ? 1.0 : 0.0;
    case ComponentKind::Ball:
      return std::abs(x - c.p0) < c.p1 ? 1.0 : 0.0;
    case ComponentKind::Custom:
      return c.fn(x);
  }
  return 0.0;
}

std::vector<double> MomentMap::eval_all(double x) const {
  std::vector<double> v(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) v[i] = eval(i, x);
  return v;
}

std::vector<double> MomentMap::evaluate(const DiscreteMeasure& mu) const {
  std::vector<double> v(components_.size(), 0.0);
  const auto& xs = mu.atoms();
  const auto& ws = mu.weights();
  for (std::size_t i = 0; i < components_.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) s += ws[j] * eval(i, xs[j]);
    v[i] = s;
  }
  return v;
}

std::optional<std::size_t> MomentMap::unbounded_component(
    const Interval& support) const {
  const int samples = 257;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    for (int s = 0; s < samples; ++s) {
      const double t = static_cast<double>(s) / (samples - 1);
      const double x = support.lo + t * support.width();
      if (!std::isfinite(eval(i, x))) return i;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ConstraintSpec

ConstraintSpec ConstraintSpec::equalities(const std::vector<double>& values) {
  ConstraintSpec spec;
  spec.targets.reserve(values.size());
  for (double v : values) spec.targets.push_back({v, v});
  return spec;
}

void ConstraintSpec::validate() const {
  for (const Interval& t : targets) {
    if (t.empty() || std::isnan(t.lo) || std::isnan(t.hi)) {
      throw std::invalid_argument("void constraint set");
    }
  }
}

bool ConstraintSpec::satisfied(const std::vector<double>& moments,
                               double tol) const {
  if (moments.size() != targets.size()) return false;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].distance(moments[i]) > tol) return false;
  }
  return true;
}

double ConstraintSpec::violation(const std::vector<double>& moments) const {
  double v = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    v += targets[i].distance(moments[i]);
  }
  return v;
}

// ---------------------------------------------------------------------------
// QuantityOfInterest

QuantityOfInterest QuantityOfInterest::tail(double a) {
  QuantityOfInterest q;
  q.kind_ = Kind::TailProbability;
  q.a_ = a;
  q.name_ = "P[X>=" + std::to_string(a) + "]";
  q.range_ = {0.0, 1.0};
  return q;
}

QuantityOfInterest QuantityOfInterest::mean() {
  QuantityOfInterest q;
  q.kind_ = Kind::Mean;
  q.name_ = "E[X]";
  q.range_ = {-std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()};
  return q;
}

QuantityOfInterest QuantityOfInterest::set_probability(IntervalUnion set) {
  QuantityOfInterest q;
  q.kind_ = Kind::SetProbability;
  q.set_ = std::move(set);
  q.name_ = "P[X in set]";
  q.range_ = {0.0, 1.0};
  return q;
}

QuantityOfInterest QuantityOfInterest::custom(
    std::string name, std::function<double(const DiscreteMeasure&)> fn,
    Interval range, std::function<double(double)> atom_fn) {
  if (!fn) throw std::invalid_argument("QuantityOfInterest: null functional");
  if (std::isinf(range.lo) && std::isinf(range.hi)) {
    throw std::invalid_argument(
        "QuantityOfInterest: custom functional must be bounded on at least one side");
  }
  QuantityOfInterest q;
  q.kind_ = Kind::Custom;
  q.name_ = std::move(name);
  q.range_ = range;
  q.fn_ = std::move(fn);
  q.atom_fn_ = std::move(atom_fn);
  return q;
}

bool QuantityOfInterest::has_atom_evaluator() const {
  return kind_ != Kind::Custom || static_cast<bool>(atom_fn_);
}

double QuantityOfInterest::atom_value(double x) const {
  switch (kind_) {
    case Kind::TailProbability:
      return x >= a_ ? 1.0 : 0.0;
    case Kind::Mean:
      return x;
    case Kind::SetProbability:
      return interval_union_contains(set_, x) ? 1.0 : 0.0;
    case Kind::Custom:
      if (!atom_fn_) {
        throw std::logic_error(
            "QuantityOfInterest: custom functional has no atom evaluator");
      }
      return atom_fn_(x);
  }
  return 0.0;
}

double QuantityOfInterest::evaluate(const DiscreteMeasure& mu) const {
  double v = 0.0;
  switch (kind_) {
    case Kind::TailProbability:
      v = mu.mass({a_, std::numeric_limits<double>::infinity()});
      break;
    case Kind::Mean:
      v = mu.mean();
      break;
    case Kind::SetProbability:
      v = mu.mass(set_);
      break;
    case Kind::Custom:
      v = fn_(mu);
      break;
  }
  if (!std::isfinite(v)) {
    throw std::runtime_error(
        "quantity of interest evaluation produced a non-finite value");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Observation

Observation::Observation(std::vector<double> centers_in, double radius_in)
    : centers(std::move(centers_in)), radius(radius_in) {
  if (!centers.empty() && !(radius > 0.0)) {
    throw std::invalid_argument("Observation: radius must be positive");
  }
  for (double c : centers) {
    if (!std::isfinite(c)) {
      throw std::invalid_argument("Observation: non-finite center");
    }
  }
}

bool Observation::in_some_ball(double x) const {
  for (double c : centers) {
    if (std::abs(x - c) < radius) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Free operations

double measure_mass(const DiscreteMeasure& mu, const IntervalUnion& set) {
  return mu.mass(set);
}

double data_probability(const DiscreteMeasure& mu, const Observation& obs) {
  double p = 1.0;
  for (std::size_t i = 0; i < obs.count(); ++i) {
    p *= mu.ball_mass(obs.centers[i], obs.radius);
    if (p == 0.0) return 0.0;
  }
  return p;
}

double data_probability(const Density& mu, const Observation& obs) {
  double p = 1.0;
  for (std::size_t i = 0; i < obs.count(); ++i) {
    p *= mu.ball_mass(obs.centers[i], obs.radius);
    if (p == 0.0) return 0.0;
  }
  return p;
}

double evaluate_qoi(const QuantityOfInterest& phi, const DiscreteMeasure& mu) {
  return phi.evaluate(mu);
}

}  // namespace brittle
