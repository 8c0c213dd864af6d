#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dpflow/geometry.hpp"
#include "dpflow/linalg.hpp"

namespace dpflow {

/// Width of the boundary band for normalized margins.
inline constexpr double kStrictTol = 1e-9;

enum class Membership { Inside, Boundary, Outside };

struct MembershipVerdict {
  Membership cls = Membership::Boundary;
  double margin = 0.0;  // normalized, sign gives the side
};

MembershipVerdict classify_margin(double margin, double tol = kStrictTol);
const char* to_string(Membership m);

/// A closed convex cone in chart coordinates.
///
/// Margins are scale-invariant:
///   halfspace / orthant   min_i <a_i, v> / |v| with unit normals
///   generators            -|G l - v| / |v| when infeasible, else the smallest
///                         facet margin (0 when facets are unavailable)
///   second order          cos angle(v, axis) - cos(aperture)
///   PSD                   lambda_min(V) / |V|_F
///   linear image A K      margin of A^{-1} v in K
class ConeSpec {
 public:
  enum class Kind { Orthant, Halfspaces, Generators, SecondOrder, PSD, LinearImage };

  static ConeSpec orthant(int n);
  static ConeSpec halfspaces(std::vector<Vec> normals);
  static ConeSpec generators(std::vector<Vec> generators);
  /// Aperture is the half-angle in radians and must lie in (0, pi/2).
  static ConeSpec second_order(Vec axis, double half_aperture);
  /// PSD cone of n x n matrices on the upper-triangle chart (dimension n(n+1)/2).
  static ConeSpec psd(int n);
  static ConeSpec linear_image(Mat a, ConeSpec base);

  Kind kind() const;
  int dim() const;
  std::string describe() const;

  double margin(const Vec& v) const;
  MembershipVerdict classify(const Vec& v, double tol = kStrictTol) const;

  /// Unit vector with the largest available interior margin: the analytic
  /// choice for orthant, second-order and PSD cones, else a Chebyshev direction.
  Vec interior_direction() const;
  bool is_solid() const;

  /// Extreme rays (unit) of polyhedral cones; empty for the others.
  const std::vector<Vec>& extreme_rays() const;
  /// Inward unit facet normals of polyhedral cones; empty when unavailable.
  const std::vector<Vec>& facet_normals() const;

  /// k unit boundary directions, deterministic in `seed`. Polyhedral cones list
  /// their extreme rays first.
  std::vector<Vec> boundary_rays(int k, std::uint64_t seed) const;

  /// A cone member u maximizing <d, u> over the unit ball (the Euclidean
  /// projection direction); zero when d lies in the polar cone.
  Vec project(const Vec& d) const;

  /// Second-order cone parameters (undefined for other kinds).
  const Vec& axis() const;
  double aperture() const;
  /// Matrix size n of PSD cones, or of the PSD base of a linear image.
  int psd_size() const;
  /// For linear images: A and the base cone.
  const Mat& image_matrix() const;
  const ConeSpec& image_base() const;

  struct Data;

 private:
  explicit ConeSpec(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

std::vector<Vec> sample_boundary_rays(const ConeSpec& cone, int k, std::uint64_t seed);

struct SurroundsResult {
  bool value = false;
  double worst_margin = 0.0;  // smallest margin of an inner boundary ray in outer
  std::string diagnostic;
  explicit operator bool() const { return value; }
};

/// Whether inner \ {0} lies in the interior of outer, judged on n_rays
/// boundary rays of inner.
SurroundsResult surrounds(const ConeSpec& outer, const ConeSpec& inner, int n_rays,
                          std::uint64_t seed = 0);

/// x -> C_M(x).
class ConeField {
 public:
  enum class Kind { Constant, Transported, CustomChart };
  using ConeFn = std::function<ConeSpec(const Point&)>;

  static ConeField constant(ConeSpec cone);
  /// C(x) = Gamma(base, x) C(base).
  static ConeField transported(Manifold manifold, Point base, ConeSpec base_cone,
                               TransportMap transport);
  static ConeField custom(int dim, ConeFn fn);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool declared_solid() const { return solid_; }
  ConeField& declare_solid(bool solid) {
    solid_ = solid;
    return *this;
  }

  ConeSpec cone_at(const Point& x) const;
  double margin(const Point& x, const Vec& v) const;
  Vec interior_direction(const Point& x) const;

  /// Constant cone, or nullptr for varying fields.
  const ConeSpec* constant_cone() const;
  /// True when C(x) is the PSD cone at every SPD point (Loewner order applies).
  bool is_loewner() const;

  const ConeSpec& base_cone() const { return base_cone_; }
  const Point& base_point() const { return base_point_; }
  const TransportMap* transport() const { return transport_.get(); }
  const Manifold* manifold() const { return manifold_.get(); }

 private:
  ConeField(Kind kind, int dim, ConeSpec base_cone)
      : kind_(kind), dim_(dim), base_cone_(std::move(base_cone)) {}

  Kind kind_;
  int dim_;
  bool solid_ = true;
  ConeSpec base_cone_;
  Point base_point_;
  std::shared_ptr<const Manifold> manifold_;
  std::shared_ptr<const TransportMap> transport_;
  ConeFn fn_;
};

/// Membership of v in C_M(x). v = 0 is Boundary with margin 0.
MembershipVerdict contains(const ConeField& field, const Point& x, const TangentVector& v,
                           double tol = kStrictTol);
double interior_margin(const ConeField& field, const Point& x, const TangentVector& v);

struct SemicontinuityReport {
  std::size_t samples = 0;
  std::size_t upper_violations = 0;
  std::size_t lower_violations = 0;
  double worst_upper = 0.0;  // most negative margin of a C(y) ray in C(x), minus -slack
  double worst_lower = 0.0;
  double slack = 0.0;
};

/// Upper semicontinuity against the widened cone {margin > -slack} and lower
/// semicontinuity via directions within `slack` of interior directions of C(x),
/// over points sampled in the chart ball of `radius` around x.
SemicontinuityReport semicontinuity_probe(const Manifold& manifold, const ConeField& field,
                                          const Point& x, double radius, int n_samples,
                                          std::uint64_t seed = 0, double slack = 0.05);

}  // namespace dpflow
