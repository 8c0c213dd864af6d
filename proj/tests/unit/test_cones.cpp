#include <doctest.h>

#include <cmath>

#include "dpflow/cones.hpp"
#include "dpflow/errors.hpp"
#include "dpflow/nnls.hpp"
#include "dpflow/rng.hpp"
#include "oracles.hpp"

using namespace dpflow;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
}  // namespace

TEST_CASE("nnls matches the exhaustive support oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 3;
    const int k = 1 + trial % 6;
    Mat a(n, k);
    std::vector<Vec> cols;
    for (int c = 0; c < k; ++c) {
      a.col(c) = gaussian_vector(rng, n);
      cols.push_back(a.col(c));
    }
    const Vec b = gaussian_vector(rng, n);
    const NnlsResult r = nnls(a, b);
    REQUIRE(r.converged);
    CHECK(r.x.minCoeff() >= 0.0);
    CHECK(r.residual == doctest::Approx(oracle::nnls_distance(cols, b)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("orthant margins and classification") {
  const ConeSpec c = ConeSpec::orthant(2);
  CHECK(c.dim() == 2);
  CHECK(c.margin(v2(1, 1)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(c.classify(v2(1, 0)).cls == Membership::Boundary);
  CHECK(c.classify(v2(1, -0.1)).cls == Membership::Outside);
  CHECK(c.interior_direction().isApprox(v2(1, 1).normalized()));
  CHECK(c.project(v2(1, -1)).isApprox(v2(1, 0)));
  CHECK(c.project(v2(-1, -1)).norm() == 0.0);
  const auto rays = c.boundary_rays(4, 0);
  REQUIRE(rays.size() == 4);
  CHECK(rays[0].isApprox(v2(1, 0)));
  CHECK(rays[1].isApprox(v2(0, 1)));
}

TEST_CASE("one-degree sweeps match the sector angles") {
  const auto orth = oracle::sweep_degrees([&](const Vec& u) {
    return ConeSpec::orthant(2).classify(u).cls == Membership::Inside;
  });
  REQUIRE(orth.size() == 89);
  CHECK(orth.front() == 1);
  CHECK(orth.back() == 89);

  const ConeSpec ice = ConeSpec::second_order(v2(1, 1), M_PI / 6);
  const auto soc = oracle::sweep_degrees(
      [&](const Vec& u) { return ice.classify(u).cls == Membership::Inside; });
  REQUIRE(soc.size() == 59);
  CHECK(soc.front() == 16);
  CHECK(soc.back() == 74);

  const ConeSpec gen = ConeSpec::generators({v2(1, 0), v2(1, 1)});
  const auto g = oracle::sweep_degrees(
      [&](const Vec& u) { return gen.classify(u).cls == Membership::Inside; });
  REQUIRE(g.size() == 44);
  CHECK(g.front() == 1);
  CHECK(g.back() == 44);

  // halfspaces {x >= 0, y <= x}: same sector as the generators above
  const ConeSpec hs = ConeSpec::halfspaces({v2(0, 1), v2(1, -1)});
  const auto h = oracle::sweep_degrees(
      [&](const Vec& u) { return hs.classify(u).cls == Membership::Inside; });
  CHECK(h == g);
}

TEST_CASE("generator membership agrees with the oracle") {
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 2;
    std::vector<Vec> gens;
    for (int k = 0; k < n + 1; ++k) gens.push_back(gaussian_vector(rng, n).cwiseAbs());
    const ConeSpec c = ConeSpec::generators(gens);
    const Vec v = gaussian_vector(rng, n);
    const double m = c.margin(v);
    if (std::abs(m) <= 1e-8) continue;
    ++checked;
    CHECK((m > 0) == oracle::in_generated_cone(gens, v));
  }
  CHECK(checked > 150);
}

TEST_CASE("psd cone") {
  const ConeSpec p = ConeSpec::psd(2);
  CHECK(p.dim() == 3);
  CHECK(p.margin((Vec(3) << 1, 0, 1).finished()) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(p.classify((Vec(3) << 1, 1, 1).finished()).cls == Membership::Boundary);
  CHECK(p.classify((Vec(3) << 1, 2, 1).finished()).cls == Membership::Outside);
}

TEST_CASE("linear image and surrounds") {
  Mat a(2, 2);
  a << 1, 1, 0, 1;
  const ConeSpec img = ConeSpec::linear_image(a, ConeSpec::orthant(2));
  // A e1 = (1,0), A e2 = (1,1)
  CHECK(img.classify(v2(2, 1)).cls == Membership::Inside);
  CHECK(img.classify(v2(0, 1)).cls == Membership::Outside);

  const ConeSpec wide = ConeSpec::second_order(v2(1, 1), 40 * M_PI / 180);
  const ConeSpec narrow = ConeSpec::second_order(v2(1, 1), 20 * M_PI / 180);
  CHECK(surrounds(wide, narrow, 32).value);
  CHECK_FALSE(surrounds(narrow, wide, 32).value);
  CHECK_FALSE(surrounds(ConeSpec::orthant(2), ConeSpec::orthant(2), 8).value);
  CHECK_THROWS_AS(ConeSpec::second_order(v2(1, 0), 2.0), ArgumentError);
}

TEST_CASE("cone fields") {
  const ConeField f = ConeField::constant(ConeSpec::orthant(2));
  REQUIRE(f.constant_cone() != nullptr);
  const Point x{v2(0, 0)};
  CHECK(contains(f, x, tangent(x, v2(1, 2))).cls == Membership::Inside);
  CHECK(contains(f, x, tangent(x, v2(0, 0))).cls == Membership::Boundary);
  const SemicontinuityReport s =
      semicontinuity_probe(Manifold::euclidean(2), f, x, 0.5, 50, 1);
  CHECK(s.upper_violations == 0);
  CHECK(s.lower_violations == 0);
}
