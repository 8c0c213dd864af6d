#include "dpflow/invariance.hpp"

#include <algorithm>
#include <cmath>

#include "dpflow/errors.hpp"
#include "dpflow/spd.hpp"

namespace dpflow {

InvarianceReport verify_transport_invariance(const Manifold& manifold, const TransportMap& transport,
                                             const ConeField& field, const PointSampler& sampler,
                                             std::size_t n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw ArgumentError("n_trials must be >= 1");
  InvarianceReport rep;
  Rng rng(seed);
  const int d = manifold.dim();
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const Point x1 = sampler(rng);
    const Point x2 = sampler(rng);
    const TangentVector u = tangent(x1, gaussian_vector(rng, d));
    const TangentVector v = tangent(x1, gaussian_vector(rng, d));
    const TangentVector gu = transport.apply(manifold, x1, x2, u);
    const TangentVector gv = transport.apply(manifold, x1, x2, v);

    const double nu = norm(manifold, u);
    const double nv = norm(manifold, v);
    const double before = inner(manifold, x1, u, v);
    const double after = inner(manifold, x2, gu, gv);
    rep.max_metric_residual = std::max(rep.max_metric_residual, std::abs(before - after) / (nu * nv));
    rep.max_norm_residual = std::max(rep.max_norm_residual, std::abs(norm(manifold, gv) - nv) / nv);

    const TangentVector back = transport.apply(manifold, x2, x1, gv);
    rep.max_roundtrip_residual = std::max(
        rep.max_roundtrip_residual, (back.components - v.components).norm() / v.components.norm());

    // Random vectors plus a boundary ray and an interior member of C(x1).
    const ConeSpec c1 = field.cone_at(x1);
    const auto rays = c1.boundary_rays(1, derive_seed(seed, {trial}));
    std::vector<Vec> probes{u.components, v.components, rays.front(),
                            c1.interior_direction() + rays.front()};
    for (const auto& w : probes) {
      const double m1 = field.margin(x1, w);
      const double m2 = field.margin(x2, transport.apply(manifold, x1, x2, tangent(x1, w)).components);
      if ((m1 > kStrictTol && m2 < -kStrictTol) || (m1 < -kStrictTol && m2 > kStrictTol)) {
        ++rep.cone_mismatches;
      }
    }
    ++rep.trials;
  }
  return rep;
}

PointSampler box_sampler(Box box) {
  return [box = std::move(box)](Rng& rng) {
    Vec p(box.dim());
    for (int i = 0; i < box.dim(); ++i) p[i] = uniform(rng, box.lower[i], box.upper[i]);
    return Point{p};
  };
}

PointSampler spd_sampler(int matrix_size, double log_spread) {
  return [matrix_size, log_spread](Rng& rng) {
    const int n = matrix_size;
    Mat g(n, n);
    for (int i = 0; i < n; ++i) g.col(i) = gaussian_vector(rng, n);
    const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();
    Vec ev = gaussian_vector(rng, n) * log_spread;
    ev = ev.array().exp();
    const Mat x = q * ev.asDiagonal() * q.transpose();
    return Point{spd::to_coords(x)};
  };
}

}  // namespace dpflow
