#include "dpflow/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dpflow {

namespace {

Vec solve_passive(const Mat& a, const Vec& b, const std::vector<int>& passive) {
  Mat sub(a.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t k = 0; k < passive.size(); ++k) sub.col(k) = a.col(passive[k]);
  return sub.colPivHouseholderQr().solve(b);
}

}  // namespace

NnlsResult nnls(const Mat& a, const Vec& b, int max_iterations) {
  const int n = static_cast<int>(a.cols());
  if (max_iterations <= 0) max_iterations = 3 * n + 10;

  NnlsResult out;
  out.x = Vec::Zero(n);
  std::vector<bool> in_passive(n, false);
  const double a_norm = a.norm();

  Vec w = a.transpose() * b;
  while (out.iterations < max_iterations) {
    // Roundoff in A^T r grows with |A| |x|.
    const double tol = 1e-12 * std::max(1.0, a_norm * (b.norm() + a_norm * out.x.norm()));
    int best = -1;
    double best_w = tol;
    for (int j = 0; j < n; ++j) {
      if (!in_passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) {
      out.converged = true;
      break;
    }
    in_passive[best] = true;
    ++out.iterations;

    // Inner loop keeps the passive solution feasible.
    while (true) {
      std::vector<int> passive;
      for (int j = 0; j < n; ++j) {
        if (in_passive[j]) passive.push_back(j);
      }
      const Vec s_passive = solve_passive(a, b, passive);
      Vec s = Vec::Zero(n);
      for (std::size_t k = 0; k < passive.size(); ++k) s[passive[k]] = s_passive[k];

      bool feasible = true;
      double alpha = std::numeric_limits<double>::infinity();
      for (int j : passive) {
        if (s[j] <= 0.0) {
          feasible = false;
          const double denom = out.x[j] - s[j];
          if (denom > 0.0) alpha = std::min(alpha, out.x[j] / denom);
        }
      }
      if (feasible) {
        out.x = s;
        break;
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      out.x += alpha * (s - out.x);
      for (int j : passive) {
        if (out.x[j] <= 1e-15 * std::max(1.0, out.x.cwiseAbs().maxCoeff())) {
          out.x[j] = 0.0;
          in_passive[j] = false;
        }
      }
      if (std::none_of(in_passive.begin(), in_passive.end(), [](bool p) { return p; })) break;
    }
    w = a.transpose() * (b - a * out.x);
  }
  out.residual = (a * out.x - b).norm();
  return out;
}

}  // namespace dpflow
