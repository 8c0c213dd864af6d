#include <doctest.h>

#include <cmath>

#include "dpflow/order.hpp"
#include "dpflow/systems.hpp"

using namespace dpflow;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Point p2(double a, double b) { return Point{v2(a, b)}; }

// Cones centred on the counter-clockwise tangent of circles about the origin.
ConeField circulating(double aperture) {
  return ConeField::custom(2, [aperture](const Point& x) {
    const Vec t = v2(-x.coords[1], x.coords[0]);
    return ConeSpec::second_order(t.norm() > 0 ? t : v2(1, 0), aperture);
  });
}
}  // namespace

TEST_CASE("orthant order on a Euclidean chart") {
  const Manifold m = Manifold::euclidean(2);
  const ConeField f = ConeField::constant(ConeSpec::orthant(2));
  CHECK(compare(m, f, p2(0, 0), p2(1, 1)).relation == Relation::StrictlyLess);
  CHECK(compare(m, f, p2(0, 0), p2(1, 1)).oracle == OrderOracle::AnalyticConstant);
  CHECK(compare(m, f, p2(0, 0), p2(1, 0)).relation == Relation::Less);
  CHECK(compare(m, f, p2(1, 1), p2(0, 0)).relation == Relation::Incomparable);
  CHECK(compare(m, f, p2(1, 0), p2(0, 1)).relation == Relation::Incomparable);
  const OrderVerdict eq = compare(m, f, p2(0.3, 0.3), p2(0.3, 0.3));
  CHECK(eq.equality);
  CHECK(eq.relation == Relation::Less);
  CHECK(compare_offset(m, f, p2(5, 5), v2(1e-14, 2e-14)).relation == Relation::StrictlyLess);
}

TEST_CASE("Loewner order on SPD") {
  const SystemSpec s = systems::spd_geodesic_relax({});
  const Point i{(Vec(3) << 1, 0, 1).finished()};
  const Point two{(Vec(3) << 2, 0, 2).finished()};
  const Point off{(Vec(3) << 2, 0.9, 1.5).finished()};
  const OrderVerdict a = compare(s, i, two);
  CHECK(a.relation == Relation::StrictlyLess);
  CHECK(a.oracle == OrderOracle::Loewner);
  // off - I = [[1, .9], [.9, .5]] is indefinite
  CHECK(compare(s, i, off).relation == Relation::Incomparable);
}

TEST_CASE("curve search for a chart-varying field") {
  const Manifold m = Manifold::euclidean(2);
  const ConeField f =
      ConeField::custom(2, [](const Point&) { return ConeSpec::orthant(2); });
  const OrderVerdict v = compare(m, f, p2(0, 0), p2(1, 0.5));
  CHECK(v.oracle == OrderOracle::CurveSearch);
  CHECK(v.relation == Relation::StrictlyLess);
  REQUIRE(v.witness.has_value());
  CHECK(v.witness->min_margin >= -kStrictTol);
  CHECK((v.witness->nodes.back().coords - v2(1, 0.5)).norm() < 1e-3);
  // unreachable targets are Undecided, never Incomparable
  CHECK(compare(m, f, p2(1, 0.5), p2(0, 0)).relation == Relation::Undecided);
}

TEST_CASE("antisymmetry fails for circulating cones") {
  const Manifold m = Manifold::euclidean(2);
  OrderBudget b;
  b.target_radius = 0.05;
  const Box annulus{v2(-1.5, -1.5), v2(1.5, 1.5)};
  const auto bad = antisymmetry_diagnostic(m, circulating(80 * M_PI / 180), annulus, 40, 3, b);
  CHECK_FALSE(bad.empty());
  const auto fine = antisymmetry_diagnostic(
      m, ConeField::custom(2, [](const Point&) { return ConeSpec::orthant(2); }), annulus, 40, 3, b);
  CHECK(fine.empty());
}

TEST_CASE("quasi-closedness of the orthant order") {
  const Manifold m = Manifold::euclidean(2);
  const ConeField f = ConeField::constant(ConeSpec::orthant(2));
  PairSequence seq;
  for (int k = 1; k <= 20; ++k) {
    seq.xs.push_back(p2(0, 0));
    seq.ys.push_back(p2(1.0 / k, 1.0 + 1.0 / k));
  }
  seq.x_limit = v2(0, 0);
  seq.y_limit = v2(0, 1);
  const QuasiClosednessReport r = quasi_closedness_probe(m, f, {seq});
  CHECK(r.sequences == 1);
  CHECK(r.holds == 1);
  CHECK(r.violations == 0);
}
