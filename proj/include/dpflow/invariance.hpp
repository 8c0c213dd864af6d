#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "dpflow/cones.hpp"
#include "dpflow/geometry.hpp"
#include "dpflow/rng.hpp"

namespace dpflow {

struct InvarianceReport {
  std::size_t trials = 0;
  /// max |(u,v)_x1 - (Gu,Gv)_x2| / (|u|_x1 |v|_x1)
  double max_metric_residual = 0.0;
  /// max | |Gv|_x2 - |v|_x1 | / |v|_x1
  double max_norm_residual = 0.0;
  /// max |G(x2,x1) G(x1,x2) v - v| / |v| in chart coordinates
  double max_roundtrip_residual = 0.0;
  /// vectors strictly inside C(x1) whose image is strictly outside C(x2), or vice versa
  std::size_t cone_mismatches = 0;
};

using PointSampler = std::function<Point(Rng&)>;

/// Samples point pairs and tangent vectors and checks that the transport
/// preserves the metric and maps C(x1) onto C(x2). Failures are counted, not thrown.
InvarianceReport verify_transport_invariance(const Manifold& manifold, const TransportMap& transport,
                                             const ConeField& field, const PointSampler& sampler,
                                             std::size_t n_trials, std::uint64_t seed = 0);

/// Uniform sampler over a chart box.
PointSampler box_sampler(Box box);
/// Random SPD matrices Q diag(exp(s g)) Q^T with g standard normal.
PointSampler spd_sampler(int matrix_size, double log_spread = 1.0);

}  // namespace dpflow
