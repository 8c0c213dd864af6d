#include <doctest.h>

#include <cmath>

#include "dpflow/limits.hpp"
#include "dpflow/systems.hpp"
#include "oracles.hpp"

using namespace dpflow;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Point p2(double a, double b) { return Point{v2(a, b)}; }
}  // namespace

TEST_CASE("omega limit of a convergent orbit") {
  const double xs = oracle::tanh_fixed_point(2.0);
  const SystemSpec s = systems::bistable_tanh({});
  const OmegaEstimate e = omega_estimate(s, p2(0.3, 0.1));
  REQUIRE(e.cls == OmegaClass::ConvergedTo);
  CHECK((e.equilibrium->coords - v2(xs, xs)).norm() < 1e-9);
  CHECK(e.omega_samples.size() == 1);
  CHECK(omega_invariance_residual(s, e, 1.0) < 1e-9);
  const OmegaEstimate lo = omega_estimate(s, p2(-0.3, -0.1));
  CHECK((lo.equilibrium->coords + v2(xs, xs)).norm() < 1e-9);
}

TEST_CASE("omega limit of a periodic orbit") {
  const SystemSpec s = systems::rotation({{"omega", 1.0}});
  const OmegaEstimate e = omega_estimate(s, p2(0.5, 0));
  REQUIRE(e.cls == OmegaClass::PeriodicOrbit);
  CHECK(e.period == doctest::Approx(2 * M_PI).epsilon(1e-6));
  CHECK(e.omega_samples.size() == 64);
  for (const auto& p : e.omega_samples) CHECK(p.coords.norm() == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(omega_invariance_residual(s, e, 1.3) < 1e-4);
  const OmegaEstimate fast = omega_estimate(systems::rotation({{"omega", 3.0}}), p2(1, 0));
  CHECK(fast.period == doctest::Approx(2 * M_PI / 3).epsilon(1e-6));
}

TEST_CASE("escape and exhausted budgets") {
  const SystemSpec grow = systems::decay({{"dim", 2}, {"rate", -1}});
  CHECK(omega_estimate(grow, p2(1, 1)).cls == OmegaClass::Escaped);
  OmegaBudget tiny;
  tiny.t_max = 0.5;
  CHECK(omega_estimate(systems::bistable_tanh({}), p2(0.3, 0.1), tiny).cls == OmegaClass::Undecided);
}

TEST_CASE("sampled pairs are ordered and monotone under cooperative flows") {
  const SystemSpec s = systems::linear_metzler({});
  const auto pairs = sample_ordered_pairs(s, s.region, 60, 9);
  REQUIRE(pairs.size() == 60);
  for (const auto& [x, y] : pairs) CHECK(is_ordered(compare(s, x, y).relation));
  const PropertyReport r = monotone_flow_check(s, pairs, {0.1, 1, 5});
  CHECK(r.fail == 0);
  CHECK(r.pass == 60);
}

TEST_CASE("dichotomy and nonordering on the bistable system") {
  const SystemSpec s = systems::bistable_tanh({});
  // straddles the stable manifold x + y = 0 of the saddle
  const std::vector<PointPair> pairs{{p2(-0.4, -0.2), p2(0.3, 0.1)}, {p2(0.2, 0.2), p2(0.5, 0.7)}};
  const PropertyReport d = dichotomy_suite(s, pairs, {});
  CHECK(d.fail == 0);
  CHECK(d.pass == 2);
  CHECK(d.extras.at("branch_a") == 1.0);
  CHECK(d.extras.at("branch_b") == 1.0);
  const PropertyReport n = nonordering_check(systems::rotation({}), omega_estimate(systems::rotation({}), p2(1, 0)));
  CHECK(n.fail > 0);  // rotation is not DP; its orbit has ordered points
}

TEST_CASE("order openness reaches a finite t0") {
  const SystemSpec s = systems::linear_metzler({});
  const PropertyReport r = order_openness_probe(s, p2(0, 0), p2(0.5, 0), 0.01, 8, 4);
  CHECK(r.fail == 0);
  REQUIRE(r.extras.count("t0") == 1);
  CHECK(r.extras.at("t0") > 0.0);
  CHECK(r.extras.at("t0") <= 1.0);
}

TEST_CASE("report merge") {
  PropertyReport a, b;
  a.property = "x";
  a.tested = a.pass = 2;
  b.tested = 3;
  b.pass = 2;
  b.fail = 1;
  b.witness = PropertyWitness{};
  b.extras["k"] = 1.0;
  merge(a, b);
  CHECK(a.tested == 5);
  CHECK(a.fail == 1);
  CHECK_FALSE(a.holds());
  CHECK(a.witness.has_value());
  CHECK(a.extras.at("k") == 1.0);
}
