#include "dpflow/geometry.hpp"

#include <cmath>
#include <string>

#include "dpflow/errors.hpp"
#include "dpflow/spd.hpp"

namespace dpflow {

bool Box::contains(const Vec& p, double slack) const {
  if (p.size() != lower.size()) return false;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] < lower[i] - slack || p[i] > upper[i] + slack) return false;
  }
  return true;
}

double Box::volume() const { return (upper - lower).prod(); }

Box Box::shrink_about(const Vec& pivot, double factor) const {
  Box out{pivot + factor * (lower - pivot), pivot + factor * (upper - pivot)};
  out.lower = out.lower.cwiseMax(lower);
  out.upper = out.upper.cwiseMin(upper);
  return out;
}

Manifold::Manifold(Kind kind, int dim, int matrix_size, MetricFn metric)
    : kind_(kind), dim_(dim), matrix_size_(matrix_size), metric_(std::move(metric)) {
  if (dim < 1) throw ArgumentError("manifold dimension must be >= 1");
}

Manifold Manifold::euclidean(int dim) { return Manifold(Kind::Euclidean, dim, 0, {}); }

Manifold Manifold::spd(int matrix_size) {
  if (matrix_size < 1) throw ArgumentError("SPD matrix size must be >= 1");
  return Manifold(Kind::SPD, spd::chart_dim(matrix_size), matrix_size, {});
}

Manifold Manifold::custom_chart(int dim, MetricFn metric) {
  if (!metric) throw ArgumentError("custom chart requires a metric callback");
  return Manifold(Kind::CustomChart, dim, 0, std::move(metric));
}

bool Manifold::in_domain(const Vec& coords) const {
  if (coords.size() != dim_ || !coords.allFinite()) return false;
  if (kind_ != Kind::SPD) return true;
  return spd::min_eigenvalue(spd::to_matrix(coords, matrix_size_)) > spd::kPositiveFloor;
}

void Manifold::require_point(const Point& x) const {
  if (x.dim() != dim_) {
    throw ArgumentError("point has dimension " + std::to_string(x.dim()) + ", manifold has " +
                        std::to_string(dim_));
  }
  if (kind_ == Kind::SPD) {
    spd::require_positive_definite(spd::to_matrix(x.coords, matrix_size_), "SPD point");
  }
}

Mat Manifold::gram(const Point& x) const {
  require_point(x);
  switch (kind_) {
    case Kind::Euclidean:
      return Mat::Identity(dim_, dim_);
    case Kind::CustomChart: {
      Mat g = metric_(x.coords);
      if (g.rows() != dim_ || g.cols() != dim_) {
        throw ArgumentError("metric callback returned a matrix of the wrong size");
      }
      return g;
    }
    case Kind::SPD: {
      const int n = matrix_size_;
      const Mat xinv = spd::to_matrix(x.coords, n).inverse();
      std::vector<Mat> basis;
      basis.reserve(dim_);
      for (int k = 0; k < dim_; ++k) {
        basis.push_back(xinv * spd::to_matrix(Vec::Unit(dim_, k), n));
      }
      Mat g(dim_, dim_);
      for (int i = 0; i < dim_; ++i) {
        for (int j = i; j < dim_; ++j) {
          g(i, j) = (basis[i] * basis[j]).trace();
          g(j, i) = g(i, j);
        }
      }
      return g;
    }
  }
  return {};
}

double Manifold::volume_density(const Point& x) const {
  if (kind_ == Kind::Euclidean) return 1.0;
  return std::sqrt(gram(x).determinant());
}

double Manifold::distance(const Point& x, const Point& y) const {
  require_point(x);
  require_point(y);
  switch (kind_) {
    case Kind::Euclidean:
      return (y.coords - x.coords).norm();
    case Kind::SPD: {
      const Mat xs = spd::inv_sqrtm(spd::to_matrix(x.coords, matrix_size_));
      const Mat inner_m = xs * spd::to_matrix(y.coords, matrix_size_) * xs;
      return spd::logm(0.5 * (inner_m + inner_m.transpose())).norm();
    }
    case Kind::CustomChart: {
      const Vec d = y.coords - x.coords;
      const Mat g = gram(Point{0.5 * (x.coords + y.coords)});
      return std::sqrt(std::max(0.0, d.dot(g * d)));
    }
  }
  return 0.0;
}

TangentVector tangent(const Point& base, Vec components) {
  return TangentVector{base, std::move(components)};
}

namespace {

void require_based_at(const Point& x, const TangentVector& v) {
  if (!(v.base == x)) throw ArgumentError("tangent vector is not based at the given point");
  if (v.components.size() != x.coords.size()) {
    throw ArgumentError("tangent vector dimension does not match its base point");
  }
}

}  // namespace

double inner(const Manifold& m, const Point& x, const TangentVector& u, const TangentVector& v) {
  require_based_at(x, u);
  require_based_at(x, v);
  m.require_point(x);
  switch (m.kind()) {
    case Manifold::Kind::Euclidean:
      return u.components.dot(v.components);
    case Manifold::Kind::SPD: {
      const int n = m.matrix_size();
      const Mat xinv = spd::to_matrix(x.coords, n).inverse();
      const Mat a = xinv * spd::to_matrix(u.components, n);
      const Mat b = xinv * spd::to_matrix(v.components, n);
      return (a * b).trace();
    }
    case Manifold::Kind::CustomChart:
      return u.components.dot(m.gram(x) * v.components);
  }
  return 0.0;
}

double norm(const Manifold& m, const TangentVector& v) {
  return std::sqrt(std::max(0.0, inner(m, v.base, v, v)));
}

Point geodesic(const Manifold& m, const Point& x, const Point& y, double t) {
  m.require_point(x);
  m.require_point(y);
  if (m.kind() != Manifold::Kind::SPD) return Point{(1.0 - t) * x.coords + t * y.coords};
  if (t == 0.0) return x;
  if (t == 1.0) return y;
  const int n = m.matrix_size();
  const Mat xm = spd::to_matrix(x.coords, n);
  const Mat xh = spd::sqrtm(xm);
  const Mat xih = spd::inv_sqrtm(xm);
  Mat middle = xih * spd::to_matrix(y.coords, n) * xih;
  middle = 0.5 * (middle + middle.transpose());
  return Point{spd::to_coords(xh * spd::powm(middle, t) * xh)};
}

TransportMap TransportMap::identity() { return TransportMap(Rule::Identity, {}); }

TransportMap TransportMap::spd_congruence() { return TransportMap(Rule::SPDCongruence, {}); }

TransportMap TransportMap::custom(LinearFn fn) {
  if (!fn) throw ArgumentError("custom transport requires a callback");
  return TransportMap(Rule::CustomLinear, std::move(fn));
}

Mat TransportMap::matrix(const Manifold& m, const Point& x1, const Point& x2) const {
  const int d = m.dim();
  switch (rule_) {
    case Rule::Identity:
      return Mat::Identity(d, d);
    case Rule::CustomLinear: {
      Mat a = fn_(x1, x2);
      if (a.rows() != d || a.cols() != d) {
        throw ArgumentError("custom transport returned a matrix of the wrong size");
      }
      return a;
    }
    case Rule::SPDCongruence: {
      Mat a(d, d);
      for (int k = 0; k < d; ++k) {
        a.col(k) = apply(m, x1, x2, tangent(x1, Vec::Unit(d, k))).components;
      }
      return a;
    }
  }
  return {};
}

TangentVector TransportMap::apply(const Manifold& m, const Point& x1, const Point& x2,
                                  const TangentVector& v) const {
  if (!(v.base == x1)) throw ArgumentError("transported vector is not based at the source point");
  if (x1.dim() != m.dim() || x2.dim() != m.dim()) {
    throw ArgumentError("transport endpoints do not belong to the manifold");
  }
  if (rule_ == Rule::SPDCongruence) {
    if (m.kind() != Manifold::Kind::SPD) {
      throw ArgumentError("SPD congruence transport requires an SPD manifold");
    }
    const int n = m.matrix_size();
    if (x1 == x2) {
      m.require_point(x1);
      return tangent(x2, v.components);
    }
    const Mat a = spd::sqrtm(spd::to_matrix(x2.coords, n)) *
                  spd::inv_sqrtm(spd::to_matrix(x1.coords, n));
    return tangent(x2, spd::to_coords(a * spd::to_matrix(v.components, n) * a.transpose()));
  }
  return tangent(x2, matrix(m, x1, x2) * v.components);
}

}  // namespace dpflow
