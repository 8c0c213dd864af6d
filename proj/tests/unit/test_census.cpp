#include <doctest.h>

#include <cmath>

#include "dpflow/census.hpp"
#include "dpflow/systems.hpp"

using namespace dpflow;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
}  // namespace

TEST_CASE("proportion intervals") {
  const Interval z = proportion_interval(0, 300);
  CHECK(z.lower == 0.0);
  CHECK(z.upper == doctest::Approx(0.01));
  // Wilson 95% for 10 / 100
  const Interval w = proportion_interval(10, 100);
  CHECK(w.lower == doctest::Approx(0.05522).epsilon(1e-3));
  CHECK(w.upper == doctest::Approx(0.17436).epsilon(1e-3));
}

TEST_CASE("pooled z statistic") {
  MeasureEstimate a, b;
  a.samples = b.samples = 1000;
  a.non_convergent = 50;
  b.non_convergent = 50;
  a.fraction = b.fraction = 0.05;
  CHECK(pooled_z(a, b) == 0.0);
  b.non_convergent = 80;
  b.fraction = 0.08;
  CHECK(pooled_z(a, b) == doctest::Approx(-2.72109).epsilon(1e-3));
}

TEST_CASE("foliation of the bistable box") {
  const SystemSpec s = systems::bistable_tanh({});
  const FoliationSpec f = build_foliation(s, Point{v2(0, 0)}, s.region, 11, 21, 1);
  CHECK(f.v.isApprox(v2(1, 1).normalized()));
  CHECK(std::abs(f.F.col(0).dot(f.v)) < 1e-12);
  CHECK(f.line_count() == 11);
  CHECK(f.f_volume() == doctest::Approx(4 * std::sqrt(2.0)));
  // the central line is the diagonal of the box
  const auto [lo, hi] = f.segment(f.line_offset(5));
  CHECK(hi - lo == doctest::Approx(4 * std::sqrt(2.0)));
}

TEST_CASE("point classification") {
  const SystemSpec s = systems::bistable_tanh({});
  const CensusContext ctx{s, find_equilibria(s, s.region, 16, 1), {}};
  CHECK(classify_point(ctx, Point{v2(0.5, 0.2)}).cls == SampleClass::Convergent);
  CHECK(classify_point(ctx, Point{v2(0.3, -0.3)}).cls == SampleClass::Boundary);
  const SystemSpec rot = systems::rotation({});
  const CensusContext rc{rot, find_equilibria(rot, rot.region, 4, 1), {}};
  CHECK(classify_point(rc, Point{v2(0.5, 0)}).cls == SampleClass::Periodic);
}

TEST_CASE("small bistable census") {
  const SystemSpec s = systems::bistable_tanh({});
  CensusOptions o;
  o.n_lines = 11;
  o.n_points = 21;
  o.seed = 3;
  const CensusReport r = run_census(s, Point{v2(0, 0)}, s.region, o);
  REQUIRE(r.refinement.size() == 3);
  CHECK(r.equilibria.items.size() == 3);
  // one boundary stratum per line at every resolution
  CHECK(r.refinement[0].fubini.fraction == doctest::Approx(1.0 / 21));
  CHECK(r.refinement[1].fubini.fraction == doctest::Approx(1.0 / 42));
  CHECK(r.refinement[2].fubini.fraction == doctest::Approx(1.0 / 84));
  CHECK(r.fit_c == doctest::Approx(1.0));
  CHECK(r.countability.max_clusters == 1);
  CHECK(r.countability.stable());
  CHECK(r.max_label_changes == 1);
  CHECK(r.basin_fractions[1] == 0.0);
  REQUIRE(r.monte_carlo.has_value());
  CHECK(r.estimators_agree);
}

TEST_CASE("foliation rejects an unusable base point") {
  const SystemSpec s = systems::bistable_tanh({});
  CHECK_THROWS_AS(build_foliation(s, Point{v2(5, 5)}, s.region, 11, 21, 1), ArgumentError);
}
