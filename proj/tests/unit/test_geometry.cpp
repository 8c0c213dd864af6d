#include <doctest.h>

#include <cmath>

#include "dpflow/errors.hpp"
#include "dpflow/geometry.hpp"
#include "dpflow/invariance.hpp"
#include "dpflow/rng.hpp"
#include "dpflow/spd.hpp"

using namespace dpflow;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }
}  // namespace

TEST_CASE("box basics") {
  const Box b{v2(-1, 0), v2(1, 4)};
  CHECK(b.volume() == doctest::Approx(8.0));
  CHECK(b.contains(v2(0, 2)));
  CHECK_FALSE(b.contains(v2(1.5, 2)));
  CHECK(b.contains(v2(1.05, 2), 0.1));
  const Box s = b.shrink_about(v2(0, 2), 0.5);
  CHECK(s.lower[0] == doctest::Approx(-0.5));
  CHECK(s.upper[1] == doctest::Approx(3.0));
}

TEST_CASE("euclidean chart") {
  const Manifold m = Manifold::euclidean(2);
  const Point x{v2(0, 0)}, y{v2(3, 4)};
  CHECK(m.distance(x, y) == doctest::Approx(5.0));
  CHECK(m.volume_density(x) == 1.0);
  CHECK(geodesic(m, x, y, 0.5).coords.isApprox(v2(1.5, 2)));
  CHECK_THROWS_AS(m.require_point(Point{v3(0, 0, 0)}), ArgumentError);
}

TEST_CASE("spd chart helpers") {
  CHECK(spd::chart_dim(3) == 6);
  CHECK(spd::matrix_size_for(6) == 3);
  CHECK_THROWS_AS(spd::matrix_size_for(4), ArgumentError);
  const Vec c = v3(2, 0.5, 1);
  const Mat a = spd::to_matrix(c, 2);
  CHECK(a(1, 0) == 0.5);
  CHECK(spd::to_coords(a).isApprox(c));
  const Mat r = spd::sqrtm(a);
  CHECK((r * r).isApprox(a, 1e-12));
  CHECK(spd::expm_symmetric(spd::logm(a)).isApprox(a, 1e-12));
  CHECK((spd::inv_sqrtm(a) * r).isApprox(Mat::Identity(2, 2), 1e-12));
}

TEST_CASE("spd affine-invariant metric") {
  const Manifold m = Manifold::spd(2);
  CHECK(m.dim() == 3);
  CHECK(m.matrix_size() == 2);
  const Point id{v3(1, 0, 1)};
  // d(I, diag(e^a, e^b)) = sqrt(a^2 + b^2)
  const Point d{v3(std::exp(1.0), 0, std::exp(-2.0))};
  CHECK(m.distance(id, d) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
  const Point mid = geodesic(m, id, Point{v3(std::exp(2.0), 0, 1)}, 0.5);
  CHECK(mid.coords.isApprox(v3(std::exp(1.0), 0, 1), 1e-12));
  CHECK_FALSE(m.in_domain(v3(1, 2, 1)));
  CHECK_THROWS_AS(m.require_point(Point{v3(1, 2, 1)}), DomainError);
  // at the identity the metric is tr(UV): off-diagonal chart entries count twice
  const double uv = inner(m, id, tangent(id, v3(0, 1, 0)), tangent(id, v3(0, 1, 0)));
  CHECK(uv == doctest::Approx(2.0));
}

TEST_CASE("congruence transport is an isometry with matching cones") {
  const Manifold m = Manifold::spd(3);
  const TransportMap g = TransportMap::spd_congruence();
  const ConeField field = ConeField::transported(m, Point{spd::to_coords(Mat::Identity(3, 3))},
                                                 ConeSpec::psd(3), g);
  const InvarianceReport r =
      verify_transport_invariance(m, g, field, spd_sampler(3), 300, 11);
  CHECK(r.trials == 300);
  CHECK(r.max_metric_residual < 1e-9);
  CHECK(r.max_roundtrip_residual < 1e-9);
  CHECK(r.cone_mismatches == 0);
}

TEST_CASE("identity transport on a non-flat chart metric is detected") {
  const Manifold m = Manifold::custom_chart(2, [](const Vec& x) {
    Mat g = Mat::Identity(2, 2);
    g(0, 0) = 1.0 + x[0] * x[0];
    return g;
  });
  const ConeField field = ConeField::constant(ConeSpec::orthant(2));
  const InvarianceReport r = verify_transport_invariance(
      m, TransportMap::identity(), field, box_sampler(Box{v2(-2, -2), v2(2, 2)}), 100, 3);
  CHECK(r.max_metric_residual > 1e-3);
  CHECK(r.cone_mismatches == 0);
}
