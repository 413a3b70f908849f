#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "brittle/measures.hpp"
#include "brittle/rng.hpp"

using namespace brittle;

TEST_CASE("interval predicates") {
  const Interval iv{0.25, 0.75};
  CHECK(iv.contains(0.25));
  CHECK(iv.contains(0.75));
  CHECK_FALSE(iv.contains(0.76));
  CHECK(iv.width() == doctest::Approx(0.5));
  CHECK(iv.clamp(-1.0) == 0.25);
  CHECK(iv.clamp(2.0) == 0.75);
  CHECK(iv.clamp(0.5) == 0.5);
  CHECK(iv.distance(0.5) == 0.0);
  CHECK(iv.distance(0.0) == doctest::Approx(0.25));
  CHECK(iv.distance(1.0) == doctest::Approx(0.25));
  CHECK(Interval{0.5, 0.5}.contains(0.5));
  CHECK(Interval{0.6, 0.4}.empty());
}

TEST_CASE("interval union membership") {
  const IntervalUnion set{{0.0, 0.2}, {0.5, 0.6}};
  CHECK(interval_union_contains(set, 0.1));
  CHECK(interval_union_contains(set, 0.5));
  CHECK_FALSE(interval_union_contains(set, 0.3));
}

TEST_CASE("discrete measure construction and normalisation") {
  const DiscreteMeasure mu({0.0, 1.0}, {0.25, 0.75});
  CHECK(mu.size() == 2);
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(mu.is_positive());

  // A drift below the repair threshold is renormalised silently.
  const DiscreteMeasure repaired({0.0, 1.0}, {0.25, 0.75 + 1e-10});
  CHECK(repaired.total_mass() == doctest::Approx(1.0).epsilon(1e-13));

  // Larger drifts are rejected; positive measures are exempt.
  CHECK_THROWS_AS(DiscreteMeasure({0.0, 1.0}, {0.25, 0.80}),
                  std::invalid_argument);
  const DiscreteMeasure positive({0.0, 1.0}, {0.25, 0.80}, {0.0, 1.0}, true);
  CHECK(positive.total_mass() == doctest::Approx(1.05));

  CHECK_THROWS_AS(DiscreteMeasure({0.0, 1.0}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure({-0.5, 1.0}, {0.5, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure({0.0, 1.0}, {-0.2, 1.2}),
                  std::invalid_argument);

  const DiscreteMeasure point = DiscreteMeasure::dirac(0.3);
  CHECK(point.size() == 1);
  CHECK(point.mean() == doctest::Approx(0.3));
}

TEST_CASE("tail quantity uses the closed-set convention") {
  // An atom sitting exactly at the threshold counts toward the tail.
  const auto phi = QuantityOfInterest::tail(0.75);
  const DiscreteMeasure mu({0.0, 0.75}, {0.5, 0.5});
  CHECK(evaluate_qoi(phi, mu) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(phi.atom_value(0.75) == 1.0);
  CHECK(phi.atom_value(0.74999) == 0.0);
}

TEST_CASE("mean quantity") {
  const auto phi = QuantityOfInterest::mean();
  const DiscreteMeasure mu({0.0, 1.0}, {0.25, 0.75});
  CHECK(evaluate_qoi(phi, mu) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("markov-extremal witness hits tail and mean simultaneously") {
  // Two atoms, half the mass at the threshold: tail probability 1/2 with
  // mean 0.3 = 0.5 * 0.6, the extremal configuration for the tail bound.
  const DiscreteMeasure mu({0.0, 0.6}, {0.5, 0.5});
  CHECK(evaluate_qoi(QuantityOfInterest::tail(0.6), mu) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mu.mean() == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("set probability quantity") {
  const auto phi = QuantityOfInterest::set_probability({{0.0, 0.1}, {0.9, 1.0}});
  const DiscreteMeasure mu({0.05, 0.5, 0.95}, {0.2, 0.3, 0.5});
  CHECK(evaluate_qoi(phi, mu) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(phi.atom_value(0.05) == 1.0);
  CHECK(phi.atom_value(0.5) == 0.0);
}

TEST_CASE("custom quantity with and without an atom evaluator") {
  const auto with_atoms = QuantityOfInterest::custom(
      "second-moment", [](const DiscreteMeasure& mu) { return mu.moment(2); },
      {0.0, 1.0}, [](double x) { return x * x; });
  CHECK(with_atoms.has_atom_evaluator());
  CHECK(with_atoms.atom_value(0.5) == doctest::Approx(0.25));

  const auto opaque = QuantityOfInterest::custom(
      "median-ish", [](const DiscreteMeasure& mu) { return mu.mean(); },
      {0.0, 1.0});
  CHECK_FALSE(opaque.has_atom_evaluator());
}

TEST_CASE("ball masses use the open-ball convention") {
  const DiscreteMeasure mu({0.2, 0.5, 0.8}, {0.3, 0.4, 0.3});
  // Atom exactly at distance radius contributes nothing.
  CHECK(mu.ball_mass(0.5, 0.3) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(mu.ball_mass(0.5, 0.30001) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mu.ball_mass(0.2, 0.05) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("mass over a partition adds up to the total mass") {
  const CounterRng rng(2024);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> atoms, weights;
    const int n = 2 + static_cast<int>(rng.uniform(3 * rep) * 5);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      atoms.push_back(rng.uniform(100 + 10 * rep + i));
      const double w = 0.05 + rng.uniform(200 + 10 * rep + i);
      weights.push_back(w);
      sum += w;
    }
    for (double& w : weights) w /= sum;
    const DiscreteMeasure mu(atoms, weights);

    // Partition [0,1] into six cells; random atoms avoid the cut points.
    const double cuts[] = {0.0, 0.17, 0.33, 0.5, 0.67, 0.83, 1.0};
    double total = 0.0;
    for (int c = 0; c + 1 < 7; ++c) {
      total += measure_mass(mu, {{cuts[c], cuts[c + 1] - (c + 1 < 6 ? 1e-13 : 0.0)}});
    }
    CHECK(total == doctest::Approx(mu.total_mass()).epsilon(1e-12));
  }
}

TEST_CASE("data probability multiplies over observation splits") {
  const CounterRng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> atoms, weights;
    for (int i = 0; i < 6; ++i) {
      atoms.push_back(rng.uniform(rep * 31 + i));
      weights.push_back(1.0 / 6.0);
    }
    const DiscreteMeasure mu(atoms, weights);
    const std::vector<double> centers{0.2, 0.45, 0.7, 0.9};
    const double radius = 0.12;
    const Observation whole(centers, radius);
    const Observation left({centers[0], centers[1]}, radius);
    const Observation right({centers[2], centers[3]}, radius);
    const double product =
        data_probability(mu, left) * data_probability(mu, right);
    CHECK(data_probability(mu, whole) ==
          doctest::Approx(product).epsilon(1e-12));
  }
  // Empty observation conditions on the sure event.
  const DiscreteMeasure mu({0.5}, {1.0});
  CHECK(data_probability(mu, Observation{}) == 1.0);
}

TEST_CASE("tail values stay within the unit interval") {
  const CounterRng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const DiscreteMeasure mu(
        {rng.uniform(2 * rep), rng.uniform(2 * rep + 1)}, {0.6, 0.4});
    const double v = evaluate_qoi(QuantityOfInterest::tail(0.3), mu);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("observation accessors and validation") {
  const Observation obs({0.25, 0.75}, 0.125);
  CHECK(obs.count() == 2);
  CHECK(obs.ball(0).lo == doctest::Approx(0.125));
  CHECK(obs.ball(0).hi == doctest::Approx(0.375));
  CHECK(obs.in_some_ball(0.3));
  CHECK_FALSE(obs.in_some_ball(0.5));
  // Exact-boundary probe (all quantities dyadic): open balls exclude it.
  CHECK_FALSE(obs.in_some_ball(0.375));
  CHECK_THROWS_AS(Observation({0.5}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Observation({0.5}, -0.1), std::invalid_argument);
  CHECK_NOTHROW(Observation({}, 0.0));
}

TEST_CASE("density masses by quadrature") {
  const Density uniform{[](double) { return 1.0; }, {0.0, 1.0}};
  CHECK(uniform.mass({0.2, 0.5}) == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(uniform.ball_mass(0.5, 0.1) == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(uniform.expectation([](double x) { return x * x; }) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-8));
  // Balls are clipped to the support.
  CHECK(uniform.ball_mass(0.0, 0.2) == doctest::Approx(0.2).epsilon(1e-8));

  const Density tilted{[](double x) { return 2.0 * x; }, {0.0, 1.0}};
  const Observation obs({0.5}, 0.1);
  CHECK(data_probability(tilted, obs) ==
        doctest::Approx(0.6 * 0.6 - 0.4 * 0.4).epsilon(1e-7));
}

TEST_CASE("adaptive quadrature") {
  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, 3.14159265358979) ==
        doctest::Approx(2.0).epsilon(1e-8));
  CHECK(integrate([](double) { return 0.0; }, 0.0, 1.0) == 0.0);
}

TEST_CASE("moment map components and evaluation") {
  MomentMap map;
  map.add_power(1).add_threshold(0.5).add_ball(0.3, 0.1);
  CHECK(map.dimension() == 3);
  CHECK(map.eval(0, 0.4) == doctest::Approx(0.4));
  CHECK(map.eval(1, 0.5) == 1.0);   // threshold is closed
  CHECK(map.eval(1, 0.49) == 0.0);
  CHECK(map.eval(2, 0.35) == 1.0);  // ball is open
  CHECK(map.eval(2, 0.4) == 0.0);

  const DiscreteMeasure mu({0.25, 0.75}, {0.5, 0.5});
  const std::vector<double> values = map.evaluate(mu);
  CHECK(values[0] == doctest::Approx(0.5));
  CHECK(values[1] == doctest::Approx(0.5));
  CHECK(values[2] == doctest::Approx(0.5));

  const MomentMap powers = MomentMap::powers(3);
  CHECK(powers.dimension() == 3);
  CHECK(powers.eval(2, 0.5) == doctest::Approx(0.125));
  CHECK(powers.eval_all(0.5).size() == 3);
}

TEST_CASE("moment map flags unbounded components") {
  MomentMap map;
  map.add_power(1);
  CHECK_FALSE(map.unbounded_component({0.0, 1.0}).has_value());
  map.add_custom("reciprocal", [](double x) { return 1.0 / x; });
  const auto bad = map.unbounded_component({0.0, 1.0});
  REQUIRE(bad.has_value());
  CHECK(*bad == 1);
}

TEST_CASE("constraint spec validation and violation") {
  ConstraintSpec spec = ConstraintSpec::equalities({0.5, 0.3});
  CHECK(spec.dimension() == 2);
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.satisfied({0.5, 0.3}, 1e-12));
  CHECK_FALSE(spec.satisfied({0.5, 0.31}, 1e-3));
  CHECK(spec.violation({0.5, 0.32}) == doctest::Approx(0.02));

  ConstraintSpec empty_target;
  empty_target.targets.push_back({0.6, 0.4});
  CHECK_THROWS_WITH_AS(empty_target.validate(),
                       doctest::Contains("void constraint set"),
                       std::invalid_argument);

  // Zero constraints are legal (the unconstrained class).
  CHECK_NOTHROW(ConstraintSpec{}.validate());
}
