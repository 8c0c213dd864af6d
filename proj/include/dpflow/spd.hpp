#pragma once

#include "dpflow/linalg.hpp"

// Symmetric positive-definite matrices stored as the row-major upper triangle
// (0,0),(0,1),...,(0,n-1),(1,1),...,(n-1,n-1). Functions of SPD matrices go
// through a symmetric eigendecomposition.
namespace dpflow::spd {

inline constexpr double kPositiveFloor = 1e-12;

constexpr int chart_dim(int n) { return n * (n + 1) / 2; }

/// Inverse of chart_dim; throws ArgumentError if `chart` is not triangular.
int matrix_size_for(int chart);

Mat to_matrix(const Vec& coords, int n);
Vec to_coords(const Mat& m);

struct SymmetricEigen {
  Vec values;   // ascending
  Mat vectors;  // columns
};

SymmetricEigen eig(const Mat& m);
double min_eigenvalue(const Mat& m);

/// Throws DomainError when the smallest eigenvalue is below kPositiveFloor.
void require_positive_definite(const Mat& m, const char* what);

Mat sqrtm(const Mat& m);
Mat inv_sqrtm(const Mat& m);
Mat powm(const Mat& m, double p);
Mat logm(const Mat& m);
/// Exponential of a symmetric (not necessarily definite) matrix.
Mat expm_symmetric(const Mat& m);

}  // namespace dpflow::spd
