#include <doctest.h>

#include <cmath>

#include "dpflow/dynamics.hpp"
#include "dpflow/errors.hpp"
#include "dpflow/integrator.hpp"
#include "dpflow/systems.hpp"
#include "oracles.hpp"

using namespace dpflow;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
}  // namespace

TEST_CASE("exponential decay matches the closed form") {
  const SystemSpec s = systems::decay({{"dim", 1}, {"rate", 0.5}});
  const FlowEnd e = flow_to(s, Point{(Vec(1) << 3.0).finished()}, 4.0);
  CHECK(e.point.coords[0] == doctest::Approx(3.0 * std::exp(-2.0)).epsilon(1e-9));
  const FlowEnd back = flow_to(s, e.point, -4.0);
  CHECK(back.point.coords[0] == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("trajectory records accepted steps") {
  IntegratorOptions opts;
  opts.max_step = 0.05;
  const SystemSpec s = systems::rotation({});
  const Trajectory tr = flow(s, Point{v2(1, 0)}, 2 * M_PI, opts);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(2 * M_PI));
  CHECK(tr.points.size() > 120);
  CHECK((tr.endpoint().coords - v2(1, 0)).norm() < 1e-7);
  // each recorded point stays on the unit circle
  double defect = 0.0;
  for (const auto& p : tr.points) defect = std::max(defect, std::abs(p.coords.norm() - 1.0));
  CHECK(defect < 1e-8);
}

TEST_CASE("variational flow of the linear system is e^{At}") {
  const SystemSpec s = systems::linear_metzler({});
  for (double t : {0.1, 1.0, 3.0}) {
    const auto [end, lin] = variational_flow(s, Point{v2(0.3, -0.7)}, t);
    CHECK((lin.matrix - oracle::expm_symmetric_toeplitz(-2, 1, t)).cwiseAbs().maxCoeff() < 1e-8);
  }
  // frozen from the oracle at t = 1
  const auto [end, lin] = variational_flow(s, Point{v2(0, 0)}, 1.0);
  CHECK(lin.matrix(0, 0) == doctest::Approx(0.2088333).epsilon(1e-6));
  CHECK(lin.matrix(0, 1) == doctest::Approx(0.1590461).epsilon(1e-6));
  CHECK(cocycle_check(s, Point{v2(0.5, 0.5)}, 0.7, 1.3) < 1e-7);
  CHECK(cocycle_check(systems::bistable_tanh({}), Point{v2(0.2, -0.4)}, 1.0, 2.0) < 1e-7);
}

TEST_CASE("escape is reported, not thrown") {
  SystemSpec s = systems::decay({{"dim", 1}, {"rate", -1.0}});
  const FlowEnd e = flow_to(s, Point{(Vec(1) << 1.0).finished()}, 100.0);
  CHECK(e.status == FlowStatus::Escaped);
  CHECK(e.t < 100.0);
}

TEST_CASE("pair flow keeps tiny separations accurate") {
  const SystemSpec s = systems::linear_metzler({});
  const Vec d = v2(1e-9, 2e-9);
  const PairFlow pf = flow_pair(s, Point{v2(1, 1)}, Point{v2(1, 1) + d}, 10.0);
  const Vec expect = oracle::expm_symmetric_toeplitz(-2, 1, 10.0) * d;
  CHECK((pf.delta - expect).norm() < 1e-6 * expect.norm());
}

TEST_CASE("differential positivity verdicts") {
  const std::vector<double> grid{0.1, 1.0, 10.0};
  const DPReport lm = check_dp(systems::linear_metzler({}), Point{v2(0.5, -0.5)}, grid, 8, 1);
  CHECK(lm.verdict == DPVerdict::SDPConsistent);
  CHECK(lm.min_margin > 0.0);
  CHECK_FALSE(lm.witness.has_value());
  const DPReport rot = check_dp(systems::rotation({}), Point{v2(0.5, 0)}, grid, 8, 1);
  CHECK(rot.verdict == DPVerdict::Violated);
  REQUIRE(rot.witness.has_value());
  CHECK(rot.witness->margin < 0.0);
  // the identity flow map only preserves the boundary
  const DPReport dec = check_dp(systems::decay({{"dim", 2}, {"rate", 1}}), Point{v2(1, 1)}, grid, 8, 1);
  CHECK(dec.verdict == DPVerdict::DPConsistent);
}

TEST_CASE("bistable equilibria") {
  const double xs = oracle::tanh_fixed_point(2.0);
  CHECK(xs == doctest::Approx(0.9575040240772687).epsilon(1e-12));
  const SystemSpec s = systems::bistable_tanh({});
  const EquilibriumSet eq = find_equilibria(s, s.region, 32, 7);
  REQUIRE(eq.items.size() == 3);
  CHECK(eq.items[0].point.coords.isApprox(v2(-xs, -xs), 1e-9));
  CHECK(eq.items[0].stability == Stability::Stable);
  CHECK(eq.items[1].point.coords.norm() < 1e-10);
  CHECK(eq.items[1].stability == Stability::Saddle);
  CHECK(eq.items[2].stability == Stability::Stable);
  CHECK(eq.find(v2(xs, xs), 1e-6) == 2);
  CHECK(eq.find(v2(0.5, 0.5), 1e-6) == -1);
}

TEST_CASE("system construction rejects bad parameters") {
  CHECK_THROWS_AS(systems::bistable_tanh({{"gian", 2}}), ArgumentError);
  CHECK_THROWS_AS(systems::builtin("nope", {}), ArgumentError);
  CHECK(systems::builtin_names().size() == 7);
  const SystemSpec sp = systems::spd_geodesic_relax({});
  CHECK(sp.dim() == 3);
  CHECK(sp.cone_field.is_loewner());
}
