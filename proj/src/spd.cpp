#include "dpflow/spd.hpp"

#include <cmath>
#include <string>

#include "dpflow/errors.hpp"

namespace dpflow::spd {

int matrix_size_for(int chart) {
  int n = 0;
  while (chart_dim(n) < chart) ++n;
  if (chart_dim(n) != chart) {
    throw ArgumentError("chart dimension " + std::to_string(chart) +
                        " is not n(n+1)/2 for any n");
  }
  return n;
}

Mat to_matrix(const Vec& coords, int n) {
  if (coords.size() != chart_dim(n)) {
    throw ArgumentError("SPD chart vector has length " + std::to_string(coords.size()) +
                        ", expected " + std::to_string(chart_dim(n)));
  }
  Mat m(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      m(i, j) = coords[k];
      m(j, i) = coords[k];
      ++k;
    }
  }
  return m;
}

Vec to_coords(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  Vec c(chart_dim(n));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) c[k++] = 0.5 * (m(i, j) + m(j, i));
  }
  return c;
}

SymmetricEigen eig(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(m);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return solver.eigenvalues()[0];
}

void require_positive_definite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
  const double lmin = min_eigenvalue(m);
  if (!(lmin > kPositiveFloor)) {
    throw DomainError(std::string(what) + ": not positive-definite (smallest eigenvalue " +
                      std::to_string(lmin) + ")");
  }
}

namespace {

template <typename F>
Mat apply_spectral(const Mat& m, F fn) {
  const auto e = eig(m);
  Vec mapped(e.values.size());
  for (int i = 0; i < e.values.size(); ++i) mapped[i] = fn(e.values[i]);
  return e.vectors * mapped.asDiagonal() * e.vectors.transpose();
}

template <typename F>
Mat apply_positive(const Mat& m, F fn, const char* what) {
  const auto e = eig(m);
  if (!(e.values[0] > kPositiveFloor)) {
    throw DomainError(std::string(what) + ": eigenvalue " + std::to_string(e.values[0]) +
                      " below positive-definiteness floor");
  }
  Vec mapped(e.values.size());
  for (int i = 0; i < e.values.size(); ++i) mapped[i] = fn(e.values[i]);
  return e.vectors * mapped.asDiagonal() * e.vectors.transpose();
}

}  // namespace

Mat sqrtm(const Mat& m) {
  return apply_positive(m, [](double l) { return std::sqrt(l); }, "sqrtm");
}

Mat inv_sqrtm(const Mat& m) {
  return apply_positive(m, [](double l) { return 1.0 / std::sqrt(l); }, "inv_sqrtm");
}

Mat powm(const Mat& m, double p) {
  return apply_positive(m, [p](double l) { return std::pow(l, p); }, "powm");
}

Mat logm(const Mat& m) {
  return apply_positive(m, [](double l) { return std::log(l); }, "logm");
}

Mat expm_symmetric(const Mat& m) {
  return apply_spectral(m, [](double l) { return std::exp(l); });
}

}  // namespace dpflow::spd
