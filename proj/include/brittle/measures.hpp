#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace brittle {

// Closed interval [lo, hi]. Degenerate (lo == hi) intervals are points;
// lo > hi denotes the empty set and is rejected wherever a nonempty target
// is required.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool empty() const { return lo > hi; }
  double width() const { return hi - lo; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  // Distance from x to the interval (0 when inside).
  double distance(double x) const {
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
  }
};

// Finite union of closed intervals.
using IntervalUnion = std::vector<Interval>;

bool interval_union_contains(const IntervalUnion& set, double x);

// Finitely supported measure on a closed interval. By default a probability
// measure: weights must sum to 1 within 1e-12; a drift up to 1e-9 is repaired
// by renormalising, anything larger is rejected. With positive=true the
// measure is an unnormalised positive measure and the weight sum is free.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights,
                  Interval support = {0.0, 1.0}, bool positive = false);

  static DiscreteMeasure dirac(double x, Interval support = {0.0, 1.0});

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  const Interval& support() const { return support_; }
  bool is_positive() const { return positive_; }
  std::size_t size() const { return atoms_.size(); }

  double total_mass() const;
  double mass(const Interval& set) const;
  double mass(const IntervalUnion& set) const;
  // Mass of the open ball (center - radius, center + radius).
  double ball_mass(double center, double radius) const;
  double expectation(const std::function<double(double)>& f) const;
  double mean() const;
  double moment(int k) const;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  Interval support_;
  bool positive_;
};

// Absolutely continuous measure given by a density on its support. Ball
// masses are computed by adaptive quadrature to relative accuracy 1e-8.
struct Density {
  std::function<double(double)> pdf;
  Interval support{0.0, 1.0};

  double mass(const Interval& set) const;
  double ball_mass(double center, double radius) const;
  double expectation(const std::function<double(double)>& f) const;
};

// Adaptive Simpson quadrature of f over [a, b] with relative tolerance
// rel_tol (absolute floor 1e-14).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-8);

// Vector of bounded test functions x -> g_k(x) defining generalised moments.
// Built-in components serialise; custom components carry a name only.
class MomentMap {
 public:
  enum class ComponentKind { Power, Threshold, Ball, Custom };

  struct Component {
    ComponentKind kind;
    double p0 = 0.0;  // Power: exponent; Threshold: a; Ball: center
    double p1 = 0.0;  // Ball: radius
    std::function<double(double)> fn;
    std::string name;
  };

  MomentMap() = default;

  MomentMap& add_power(int k);
  MomentMap& add_threshold(double a);          // x -> 1{x >= a}
  MomentMap& add_ball(double center, double radius);  // open ball indicator
  MomentMap& add_custom(std::string name, std::function<double(double)> fn);

  static MomentMap powers(int k_max);  // x, x^2, ..., x^k_max

  std::size_t dimension() const { return components_.size(); }
  const Component& component(std::size_t i) const { return components_[i]; }
  double eval(std::size_t i, double x) const;
  std::vector<double> eval_all(double x) const;
  // Componentwise expectations under mu.
  std::vector<double> evaluate(const DiscreteMeasure& mu) const;

  // Rejects components that are non-finite anywhere on a sample of the
  // support; returns the offending component index if any.
  std::optional<std::size_t> unbounded_component(const Interval& support) const;

 private:
  std::vector<Component> components_;
};

// Target set Z for generalised moments: a box of closed (possibly
// semi-infinite) intervals, one per moment component.
struct ConstraintSpec {
  std::vector<Interval> targets;

  static ConstraintSpec equalities(const std::vector<double>& values);

  std::size_t dimension() const { return targets.size(); }
  void validate() const;  // throws on empty targets
  bool satisfied(const std::vector<double>& moments, double tol) const;
  double violation(const std::vector<double>& moments) const;
};

// Quantity of interest Phi acting on measures. The canonical kinds are
// affine in the measure and expose an atom-level evaluator phi with
// Phi(mu) = E_mu[phi]; custom functionals may supply their own atom
// evaluator to remain usable by the reduction calculus.
class QuantityOfInterest {
 public:
  enum class Kind { TailProbability, Mean, SetProbability, Custom };

  // P[X >= a], closed tail set.
  static QuantityOfInterest tail(double a);
  static QuantityOfInterest mean();
  static QuantityOfInterest set_probability(IntervalUnion set);
  static QuantityOfInterest custom(std::string name,
                                   std::function<double(const DiscreteMeasure&)> fn,
                                   Interval range,
                                   std::function<double(double)> atom_fn = nullptr);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double tail_threshold() const { return a_; }
  const IntervalUnion& set() const { return set_; }
  // Declared range [lower, upper]; at least one end must be finite.
  const Interval& range() const { return range_; }

  bool has_atom_evaluator() const;
  double atom_value(double x) const;  // Phi(delta_x)
  double evaluate(const DiscreteMeasure& mu) const;

 private:
  QuantityOfInterest() = default;
  Kind kind_ = Kind::Mean;
  std::string name_;
  double a_ = 0.0;
  IntervalUnion set_;
  Interval range_{0.0, 1.0};
  std::function<double(const DiscreteMeasure&)> fn_;
  std::function<double(double)> atom_fn_;
};

// n observed sample points, each contributing the open ball
// (center_i - radius, center_i + radius) to the data event.
struct Observation {
  std::vector<double> centers;
  double radius = 0.0;

  Observation() = default;
  Observation(std::vector<double> centers, double radius);

  std::size_t count() const { return centers.size(); }
  Interval ball(std::size_t i) const {
    return {centers[i] - radius, centers[i] + radius};
  }
  bool in_some_ball(double x) const;
};

// Spec-level operations (thin wrappers over the member functions).
double measure_mass(const DiscreteMeasure& mu, const IntervalUnion& set);
double data_probability(const DiscreteMeasure& mu, const Observation& obs);
double data_probability(const Density& mu, const Observation& obs);
double evaluate_qoi(const QuantityOfInterest& phi, const DiscreteMeasure& mu);

}  // namespace brittle
