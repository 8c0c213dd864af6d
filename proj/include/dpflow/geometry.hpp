#pragma once

#include <functional>

#include "dpflow/linalg.hpp"

namespace dpflow {

/// A point of M in chart coordinates.
struct Point {
  Vec coords;

  int dim() const { return static_cast<int>(coords.size()); }
  bool operator==(const Point& other) const {
    return coords.size() == other.coords.size() && coords == other.coords;
  }
};

/// v in T_xM, with components in the chart basis.
struct TangentVector {
  Point base;
  Vec components;
};

/// Axis-aligned coordinate box in chart coordinates.
struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& p, double slack = 0.0) const;
  double volume() const;
  Vec center() const { return 0.5 * (lower + upper); }
  Vec width() const { return upper - lower; }
  /// Box scaled about `pivot` by `factor`, clipped to this box.
  Box shrink_about(const Vec& pivot, double factor) const;
};

/// Chart description of a Riemannian manifold with one global chart.
class Manifold {
 public:
  enum class Kind { Euclidean, SPD, CustomChart };
  /// Gram matrix of the metric at a chart point.
  using MetricFn = std::function<Mat(const Vec&)>;

  static Manifold euclidean(int dim);
  /// Points are n x n SPD matrices, chart dimension n(n+1)/2, affine-invariant metric.
  static Manifold spd(int matrix_size);
  static Manifold custom_chart(int dim, MetricFn metric);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  /// Matrix size n for SPD manifolds, 0 otherwise.
  int matrix_size() const { return matrix_size_; }

  /// Throws ArgumentError on a dimension mismatch and DomainError when the
  /// point is outside the chart domain.
  void require_point(const Point& x) const;
  bool in_domain(const Vec& coords) const;

  Mat gram(const Point& x) const;
  /// sqrt(det g) at x; identically 1 for Euclidean charts.
  double volume_density(const Point& x) const;
  double distance(const Point& x, const Point& y) const;

  bool same_as(const Manifold& other) const {
    return kind_ == other.kind_ && dim_ == other.dim_;
  }

 private:
  Manifold(Kind kind, int dim, int matrix_size, MetricFn metric);

  Kind kind_;
  int dim_;
  int matrix_size_;
  MetricFn metric_;
};

TangentVector tangent(const Point& base, Vec components);

/// (u, v)_x.
double inner(const Manifold& m, const Point& x, const TangentVector& u, const TangentVector& v);
/// |v|_x.
double norm(const Manifold& m, const TangentVector& v);

/// Point at parameter t along the geodesic from x to y. Custom charts use the
/// straight chart segment.
Point geodesic(const Manifold& m, const Point& x, const Point& y, double t);

/// Linear invertible transport Gamma(x1, x2): T_{x1}M -> T_{x2}M.
class TransportMap {
 public:
  enum class Rule { Identity, SPDCongruence, CustomLinear };
  /// Chart matrix of Gamma(x1, x2).
  using LinearFn = std::function<Mat(const Point&, const Point&)>;

  static TransportMap identity();
  /// V -> Y^{1/2} X^{-1/2} V X^{-1/2} Y^{1/2}.
  static TransportMap spd_congruence();
  static TransportMap custom(LinearFn fn);

  Rule rule() const { return rule_; }

  TangentVector apply(const Manifold& m, const Point& x1, const Point& x2,
                      const TangentVector& v) const;
  Mat matrix(const Manifold& m, const Point& x1, const Point& x2) const;

 private:
  TransportMap(Rule rule, LinearFn fn) : rule_(rule), fn_(std::move(fn)) {}

  Rule rule_;
  LinearFn fn_;
};

}  // namespace dpflow
