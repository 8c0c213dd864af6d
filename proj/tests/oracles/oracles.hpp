#pragma once

// Independent reference computations used by unit and acceptance tests.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Root of g on [lo, hi] by bisection; g(lo) and g(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& g, double lo, double hi, int iters = 200) {
  double glo = g(lo);
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Positive solution of x = tanh(gain x), gain > 1.
inline double tanh_fixed_point(double gain) {
  return bisect([gain](double x) { return std::tanh(gain * x) - x; }, 0.1, 1.0);
}

/// e^{At} for the symmetric 2x2 A = [[a, b], [b, a]]: e^{at} [[cosh bt, sinh bt], [sinh bt, cosh bt]].
inline Mat expm_symmetric_toeplitz(double a, double b, double t) {
  Mat e(2, 2);
  const double s = std::exp(a * t);
  e << s * std::cosh(b * t), s * std::sinh(b * t), s * std::sinh(b * t), s * std::cosh(b * t);
  return e;
}

/// Exact NNLS distance min_{l >= 0} |G l - v| by enumerating every support
/// subset: the optimum is an unconstrained least-squares fit on its support
/// with nonnegative coefficients.
inline double nnls_distance(const std::vector<Vec>& gens, const Vec& v) {
  const int k = static_cast<int>(gens.size());
  double best = v.norm();  // empty support
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    Mat g(v.size(), idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c) g.col(c) = gens[idx[c]];
    const Vec l = g.completeOrthogonalDecomposition().solve(v);
    if (l.minCoeff() < -1e-12) continue;
    best = std::min(best, (g * l - v).norm());
  }
  return best;
}

/// Whether v lies in cone(gens), up to a relative residual `tol`.
inline bool in_generated_cone(const std::vector<Vec>& gens, const Vec& v, double tol = 1e-10) {
  return nnls_distance(gens, v) <= tol * std::max(1.0, v.norm());
}

/// Angular sweep of planar directions in 1 degree steps; returns the
/// directions (unit) at which `inside` holds.
inline std::vector<double> sweep_degrees(const std::function<bool(const Vec&)>& inside) {
  std::vector<double> hits;
  for (int d = 0; d < 360; ++d) {
    const double th = d * M_PI / 180.0;
    Vec u(2);
    u << std::cos(th), std::sin(th);
    if (inside(u)) hits.push_back(d);
  }
  return hits;
}

}  // namespace oracle
