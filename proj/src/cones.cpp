#include "dpflow/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dpflow/errors.hpp"
#include "dpflow/nnls.hpp"
#include "dpflow/rng.hpp"
#include "dpflow/spd.hpp"

namespace dpflow {

struct ConeSpec::Data {
  Kind kind = Kind::Orthant;
  int dim = 0;
  std::vector<Vec> normals;  // unit, inward
  std::vector<Vec> rays;     // unit extreme rays
  Mat generator_matrix;      // columns are generators (Generators kind)
  bool facets_known = false;
  Vec axis;
  double aperture = 0.0;
  double cos_aperture = 0.0;
  int psd_n = 0;
  Mat image;
  Mat image_inverse;
  std::shared_ptr<const ConeSpec> base;
  Vec interior;
  bool solid = false;
};

namespace {

constexpr double kSignEps = 1e-10;
constexpr double kFeasibilityResidual = 1e-10;
constexpr std::size_t kMaxSubsets = 2'000'000;

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<std::size_t>(std::llround(r));
}

void push_unique(std::vector<Vec>& out, const Vec& n) {
  for (const auto& m : out) {
    if ((m - n).norm() < 1e-9) return;
  }
  out.push_back(n);
}

// Unit directions orthogonal to d-1 linearly independent members of `vecs`
// that have non-negative inner product with every member. Applied to
// generators this yields facet normals; applied to halfspace normals it
// yields extreme rays.
std::vector<Vec> supporting_directions(const std::vector<Vec>& vecs, int d, bool* complete) {
  std::vector<Vec> out;
  *complete = true;
  const int m = static_cast<int>(vecs.size());
  auto admissible = [&](const Vec& n) {
    for (const auto& v : vecs) {
      if (v.dot(n) < -kSignEps) return false;
    }
    return true;
  };
  if (d == 1) {
    for (double s : {1.0, -1.0}) {
      Vec n = Vec::Constant(1, s);
      if (admissible(n)) push_unique(out, n);
    }
    return out;
  }
  if (m < d - 1) return out;
  if (binomial(m, d - 1) > kMaxSubsets) {
    *complete = false;
    return out;
  }
  std::vector<int> idx(d - 1);
  for (int i = 0; i < d - 1; ++i) idx[i] = i;
  while (true) {
    Mat rows(d - 1, d);
    for (int i = 0; i < d - 1; ++i) rows.row(i) = vecs[idx[i]].transpose();
    Eigen::JacobiSVD<Mat> svd(rows, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    if (sv[d - 2] > 1e-10 * std::max(1.0, sv[0])) {
      Vec n = svd.matrixV().col(d - 1).normalized();
      const bool pos = admissible(n);
      const bool neg = admissible(-n);
      if (pos && !neg) push_unique(out, n);
      if (neg && !pos) push_unique(out, -n);
    }
    int pos = d - 2;
    while (pos >= 0 && idx[pos] == m - (d - 1) + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < d - 1; ++i) idx[i] = idx[i - 1] + 1;
  }
  return out;
}

double min_normal_margin(const std::vector<Vec>& normals, const Vec& unit_v) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& n : normals) m = std::min(m, n.dot(unit_v));
  return m;
}

// Maximizes min_i <n_i, u> over the unit sphere by projected subgradient ascent.
Vec chebyshev_direction(const std::vector<Vec>& normals, Vec start) {
  if (normals.empty()) return start.normalized();
  Vec u = start.normalized();
  Vec best = u;
  double best_val = min_normal_margin(normals, u);
  double step = 0.5;
  for (int it = 0; it < 4000; ++it) {
    std::size_t arg = 0;
    double val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < normals.size(); ++i) {
      const double s = normals[i].dot(u);
      if (s < val) {
        val = s;
        arg = i;
      }
    }
    if (val > best_val) {
      best_val = val;
      best = u;
    }
    u = (u + step * normals[arg]).normalized();
    step *= 0.998;
  }
  return best;
}

// Projection onto an intersection of halfspaces {<n_i, v> >= 0} (Dykstra).
Vec dykstra_project(const std::vector<Vec>& normals, const Vec& d) {
  const std::size_t m = normals.size();
  Vec x = d;
  std::vector<Vec> corrections(m, Vec::Zero(d.size()));
  for (int sweep = 0; sweep < 2000; ++sweep) {
    const Vec before = x;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec y = x + corrections[i];
      const double s = normals[i].dot(y);
      const Vec p = s < 0.0 ? Vec(y - s * normals[i]) : y;
      corrections[i] = y - p;
      x = p;
    }
    if ((x - before).norm() <= 1e-15 * std::max(1.0, d.norm())) break;
  }
  return x;
}

std::shared_ptr<ConeSpec::Data> make_polyhedral(ConeSpec::Kind kind, int dim,
                                                std::vector<Vec> normals, std::vector<Vec> rays,
                                                bool facets_known) {
  auto data = std::make_shared<ConeSpec::Data>();
  data->kind = kind;
  data->dim = dim;
  data->normals = std::move(normals);
  data->rays = std::move(rays);
  data->facets_known = facets_known;
  return data;
}

}  // namespace

MembershipVerdict classify_margin(double margin, double tol) {
  if (margin > tol) return {Membership::Inside, margin};
  if (margin < -tol) return {Membership::Outside, margin};
  return {Membership::Boundary, margin};
}

const char* to_string(Membership m) {
  switch (m) {
    case Membership::Inside:
      return "inside";
    case Membership::Boundary:
      return "boundary";
    case Membership::Outside:
      return "outside";
  }
  return "?";
}

ConeSpec ConeSpec::orthant(int n) {
  if (n < 1) throw ArgumentError("orthant dimension must be >= 1");
  std::vector<Vec> unit;
  for (int i = 0; i < n; ++i) unit.push_back(Vec::Unit(n, i));
  auto data = make_polyhedral(Kind::Orthant, n, unit, unit, true);
  data->interior = Vec::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  data->solid = true;
  return ConeSpec(data);
}

ConeSpec ConeSpec::halfspaces(std::vector<Vec> normals) {
  if (normals.empty()) throw ArgumentError("halfspace cone needs at least one normal");
  const int d = static_cast<int>(normals.front().size());
  for (auto& n : normals) {
    if (n.size() != d) throw ArgumentError("halfspace normals have inconsistent dimensions");
    if (!(n.norm() > 0.0)) throw ArgumentError("halfspace normal must be nonzero");
    n.normalize();
  }
  bool complete = true;
  auto rays = supporting_directions(normals, d, &complete);
  Vec start = Vec::Zero(d);
  for (const auto& r : rays) start += r;
  if (start.norm() < 1e-12) {
    for (const auto& n : normals) start += n;
  }
  if (start.norm() < 1e-12) start = normals.front();
  auto data = make_polyhedral(Kind::Halfspaces, d, normals, std::move(rays), true);
  data->interior = chebyshev_direction(data->normals, start);
  data->solid = min_normal_margin(data->normals, data->interior) > kStrictTol;
  return ConeSpec(data);
}

ConeSpec ConeSpec::generators(std::vector<Vec> gens) {
  if (gens.empty()) throw ArgumentError("generator cone needs at least one generator");
  const int d = static_cast<int>(gens.front().size());
  for (auto& g : gens) {
    if (g.size() != d) throw ArgumentError("generators have inconsistent dimensions");
    if (!(g.norm() > 0.0)) throw ArgumentError("generator must be nonzero");
    g.normalize();
  }
  Mat gm(d, static_cast<Eigen::Index>(gens.size()));
  for (std::size_t j = 0; j < gens.size(); ++j) gm.col(j) = gens[j];
  const bool full_rank = Eigen::FullPivLU<Mat>(gm).rank() == d;

  bool complete = true;
  std::vector<Vec> facets = full_rank ? supporting_directions(gens, d, &complete)
                                      : std::vector<Vec>{};
  // Extreme generators are those lying on at least d-1 facets.
  std::vector<Vec> rays;
  for (const auto& g : gens) {
    if (facets.empty()) {
      push_unique(rays, g);
      continue;
    }
    int on = 0;
    for (const auto& f : facets) {
      if (std::abs(f.dot(g)) <= kSignEps) ++on;
    }
    if (on >= d - 1) push_unique(rays, g);
  }
  const bool facets_known = full_rank && complete && !facets.empty();
  auto data = make_polyhedral(Kind::Generators, d, std::move(facets), std::move(rays), facets_known);
  data->generator_matrix = gm;
  Vec start = Vec::Zero(d);
  for (const auto& g : gens) start += g;
  if (start.norm() < 1e-12) start = gens.front();
  data->interior = chebyshev_direction(data->normals, start);
  data->solid = facets_known && min_normal_margin(data->normals, data->interior) > kStrictTol;
  return ConeSpec(data);
}

ConeSpec ConeSpec::second_order(Vec axis, double half_aperture) {
  if (axis.size() < 1 || !(axis.norm() > 0.0)) throw ArgumentError("second-order axis must be nonzero");
  if (!(half_aperture > 0.0 && half_aperture < std::numbers::pi / 2)) {
    throw ArgumentError("second-order aperture must lie in (0, pi/2)");
  }
  auto data = std::make_shared<Data>();
  data->kind = Kind::SecondOrder;
  data->dim = static_cast<int>(axis.size());
  data->axis = axis.normalized();
  data->aperture = half_aperture;
  data->cos_aperture = std::cos(half_aperture);
  data->interior = data->axis;
  data->solid = true;
  return ConeSpec(data);
}

ConeSpec ConeSpec::psd(int n) {
  if (n < 1) throw ArgumentError("PSD matrix size must be >= 1");
  auto data = std::make_shared<Data>();
  data->kind = Kind::PSD;
  data->dim = spd::chart_dim(n);
  data->psd_n = n;
  data->interior = spd::to_coords(Mat::Identity(n, n)).normalized();
  data->solid = true;
  return ConeSpec(data);
}

ConeSpec ConeSpec::linear_image(Mat a, ConeSpec base) {
  if (a.rows() != base.dim() || a.cols() != base.dim()) {
    throw ArgumentError("linear image matrix does not match the base cone dimension");
  }
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) throw NumericError("linear image matrix is singular");
  auto data = std::make_shared<Data>();
  data->kind = Kind::LinearImage;
  data->dim = base.dim();
  data->image_inverse = lu.inverse();
  data->interior = (a * base.interior_direction()).normalized();
  data->image = std::move(a);
  data->solid = base.is_solid();
  data->psd_n = base.psd_size();
  data->base = std::make_shared<const ConeSpec>(std::move(base));
  return ConeSpec(data);
}

ConeSpec::Kind ConeSpec::kind() const { return data_->kind; }
int ConeSpec::dim() const { return data_->dim; }
bool ConeSpec::is_solid() const { return data_->solid; }
Vec ConeSpec::interior_direction() const { return data_->interior; }
const std::vector<Vec>& ConeSpec::extreme_rays() const { return data_->rays; }
const std::vector<Vec>& ConeSpec::facet_normals() const { return data_->normals; }
const Vec& ConeSpec::axis() const { return data_->axis; }
double ConeSpec::aperture() const { return data_->aperture; }
int ConeSpec::psd_size() const { return data_->psd_n; }
const Mat& ConeSpec::image_matrix() const { return data_->image; }
const ConeSpec& ConeSpec::image_base() const {
  if (!data_->base) throw ArgumentError("cone is not a linear image");
  return *data_->base;
}

std::string ConeSpec::describe() const {
  std::ostringstream os;
  switch (data_->kind) {
    case Kind::Orthant:
      os << "orthant(" << data_->dim << ")";
      break;
    case Kind::Halfspaces:
      os << "halfspaces(" << data_->normals.size() << " normals, dim " << data_->dim << ")";
      break;
    case Kind::Generators:
      os << "generators(" << data_->generator_matrix.cols() << " rays, dim " << data_->dim << ")";
      break;
    case Kind::SecondOrder:
      os << "second_order(dim " << data_->dim << ", aperture " << data_->aperture << ")";
      break;
    case Kind::PSD:
      os << "psd(" << data_->psd_n << ")";
      break;
    case Kind::LinearImage:
      os << "linear_image(" << data_->base->describe() << ")";
      break;
  }
  return os.str();
}

double ConeSpec::margin(const Vec& v) const {
  if (v.size() != data_->dim) {
    throw ArgumentError("vector of dimension " + std::to_string(v.size()) +
                        " tested against a cone of dimension " + std::to_string(data_->dim));
  }
  const double len = v.norm();
  if (!(len > 0.0)) return 0.0;
  const Vec u = v / len;
  switch (data_->kind) {
    case Kind::Orthant:
      return u.minCoeff();
    case Kind::Halfspaces:
      return min_normal_margin(data_->normals, u);
    case Kind::Generators: {
      const auto sol = nnls(data_->generator_matrix, u);
      if (sol.residual > kFeasibilityResidual) return -sol.residual;
      if (data_->facets_known) return min_normal_margin(data_->normals, u);
      // Full-rank generators without supporting facets span the whole space.
      return data_->normals.empty() && Eigen::FullPivLU<Mat>(data_->generator_matrix).rank() == data_->dim
                 ? 1.0
                 : 0.0;
    }
    case Kind::SecondOrder:
      return u.dot(data_->axis) - data_->cos_aperture;
    case Kind::PSD: {
      const Mat m = spd::to_matrix(v, data_->psd_n);
      return spd::min_eigenvalue(m) / m.norm();
    }
    case Kind::LinearImage:
      return data_->base->margin(data_->image_inverse * v);
  }
  return 0.0;
}

MembershipVerdict ConeSpec::classify(const Vec& v, double tol) const {
  return classify_margin(margin(v), tol);
}

namespace {

// Moves a candidate direction onto the boundary band by bisection along the
// segment joining it with the interior direction.
Vec polish_to_boundary(const ConeSpec& cone, Vec r) {
  const double tol = 0.5 * kStrictTol;
  double m = cone.margin(r);
  if (std::abs(m) <= tol) return r.normalized();
  const Vec c = cone.interior_direction();
  Vec inside = c;
  Vec outside = r;
  if (m > 0.0) {
    Vec dir = r - c;
    if (dir.norm() < 1e-14) throw NumericError("boundary projection: degenerate direction");
    double s = 1.0;
    int grow = 0;
    while (cone.margin(c + s * dir) >= -tol) {
      s *= 2.0;
      if (++grow > 80) throw NumericError("boundary projection: no exterior point found");
    }
    outside = c + s * dir;
  }
  for (int it = 0; it < 200; ++it) {
    const Vec mid = 0.5 * (inside + outside);
    const double mm = cone.margin(mid);
    if (std::abs(mm) <= tol) return mid.normalized();
    if (mm > 0.0) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  throw NumericError("boundary projection did not converge after 200 bisection steps");
}

Vec random_facet_point(const ConeSpec::Data& data, std::size_t facet, Rng& rng) {
  const Vec& n = data.normals[facet];
  Vec acc = Vec::Zero(data.dim);
  int used = 0;
  for (const auto& r : data.rays) {
    if (std::abs(n.dot(r)) <= 1e-9) {
      acc += -std::log(1.0 - uniform01(rng)) * r;
      ++used;
    }
  }
  if (used == 0 || acc.norm() < 1e-14) return {};
  return acc.normalized();
}

}  // namespace

std::vector<Vec> ConeSpec::boundary_rays(int k, std::uint64_t seed) const {
  if (k < 1) throw ArgumentError("boundary ray count must be >= 1");
  Rng rng(seed);
  std::vector<Vec> out;
  out.reserve(k);
  const auto& d = *data_;
  switch (d.kind) {
    case Kind::Orthant:
    case Kind::Halfspaces:
    case Kind::Generators: {
      for (const auto& r : d.rays) {
        if (static_cast<int>(out.size()) == k) break;
        if (std::abs(margin(r)) <= kStrictTol) out.push_back(r);
      }
      std::size_t facet = 0;
      int attempts = 0;
      while (static_cast<int>(out.size()) < k) {
        if (++attempts > 100 * k + 100) {
          throw NumericError("could not sample boundary rays on any facet");
        }
        Vec p;
        if (!d.normals.empty()) {
          p = random_facet_point(d, facet % d.normals.size(), rng);
          ++facet;
        } else if (!d.rays.empty()) {
          p = Vec::Zero(d.dim);
          for (const auto& r : d.rays) p += -std::log(1.0 - uniform01(rng)) * r;
          if (p.norm() > 1e-14) p.normalize();
        }
        if (p.size() == d.dim && std::abs(margin(p)) <= kStrictTol) out.push_back(p);
      }
      break;
    }
    case Kind::SecondOrder: {
      const double c = d.cos_aperture;
      const double s = std::sin(d.aperture);
      if (d.dim == 1) throw NumericError("one-dimensional second-order cone has no boundary rays");
      if (d.dim == 2) {
        const Vec perp = (Vec(2) << -d.axis[1], d.axis[0]).finished();
        for (int i = 0; i < k; ++i) {
          const double sign = (i % 2 == 0) ? 1.0 : -1.0;
          out.push_back(polish_to_boundary(*this, c * d.axis + sign * s * perp));
        }
      } else {
        for (int i = 0; i < k; ++i) {
          Vec w = unit_vector(rng, d.dim);
          w -= w.dot(d.axis) * d.axis;
          if (w.norm() < 1e-8) {
            --i;
            continue;
          }
          out.push_back(polish_to_boundary(*this, c * d.axis + s * w.normalized()));
        }
      }
      break;
    }
    case Kind::PSD: {
      for (int i = 0; i < k; ++i) {
        const Vec u = unit_vector(rng, d.psd_n);
        Vec r = spd::to_coords(u * u.transpose());
        const double fro = spd::to_matrix(r, d.psd_n).norm();
        r /= fro;
        if (std::abs(margin(r)) > kStrictTol) r = polish_to_boundary(*this, r);
        out.push_back(r);
      }
      break;
    }
    case Kind::LinearImage: {
      for (const auto& r : d.base->boundary_rays(k, seed)) {
        Vec img = (d.image * r).normalized();
        if (std::abs(margin(img)) > kStrictTol) img = polish_to_boundary(*this, img);
        out.push_back(img);
      }
      break;
    }
  }
  return out;
}

Vec ConeSpec::project(const Vec& v) const {
  if (v.size() != data_->dim) throw ArgumentError("projection vector has the wrong dimension");
  const auto& d = *data_;
  switch (d.kind) {
    case Kind::Orthant:
      return v.cwiseMax(0.0);
    case Kind::Halfspaces: {
      if (d.rays.empty()) return dykstra_project(d.normals, v);
      Mat r(d.dim, static_cast<Eigen::Index>(d.rays.size()));
      for (std::size_t j = 0; j < d.rays.size(); ++j) r.col(j) = d.rays[j];
      return r * nnls(r, v).x;
    }
    case Kind::Generators:
      return d.generator_matrix * nnls(d.generator_matrix, v).x;
    case Kind::SecondOrder: {
      const double t = v.dot(d.axis);
      const Vec w = v - t * d.axis;
      const double r = w.norm();
      if (r <= t * std::tan(d.aperture)) return t > 0.0 ? v : Vec(Vec::Zero(d.dim));
      const Vec wdir = r > 0.0 ? Vec(w / r) : Vec(Vec::Zero(d.dim));
      const Vec edge = d.cos_aperture * d.axis + std::sin(d.aperture) * wdir;
      const double s = v.dot(edge);
      return s > 0.0 ? Vec(s * edge) : Vec(Vec::Zero(d.dim));
    }
    case Kind::PSD: {
      const auto e = spd::eig(spd::to_matrix(v, d.psd_n));
      const Vec clipped = e.values.cwiseMax(0.0);
      return spd::to_coords(e.vectors * clipped.asDiagonal() * e.vectors.transpose());
    }
    case Kind::LinearImage: {
      // Projected gradient ascent of <v, A w> over w in K with |A w| <= 1.
      Vec w = d.base->project(d.image_inverse * v);
      auto renorm = [&](Vec& x) {
        const double len = (d.image * x).norm();
        if (len > 1.0) x /= len;
      };
      renorm(w);
      const Vec grad = d.image.transpose() * v;
      const double step = 1.0 / std::max(1e-12, d.image.norm() * d.image.norm());
      for (int it = 0; it < 200; ++it) {
        Vec next = d.base->project(w + step * grad);
        renorm(next);
        if ((next - w).norm() < 1e-13) break;
        w = next;
      }
      const Vec u = d.image * w;
      return u.dot(v) > 0.0 ? u : Vec(Vec::Zero(d.dim));
    }
  }
  return v;
}

std::vector<Vec> sample_boundary_rays(const ConeSpec& cone, int k, std::uint64_t seed) {
  return cone.boundary_rays(k, seed);
}

SurroundsResult surrounds(const ConeSpec& outer, const ConeSpec& inner, int n_rays,
                          std::uint64_t seed) {
  SurroundsResult out;
  if (outer.dim() != inner.dim()) throw ArgumentError("surrounds: cone dimensions differ");
  if (!outer.is_solid()) {
    out.diagnostic = "outer cone is not solid";
    return out;
  }
  const auto rays = inner.boundary_rays(std::max(n_rays, 1), seed);
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : rays) out.worst_margin = std::min(out.worst_margin, outer.margin(r));
  out.value = out.worst_margin > kStrictTol;
  if (!out.value) {
    std::ostringstream os;
    os << "inner boundary ray with margin " << out.worst_margin << " in outer cone";
    out.diagnostic = os.str();
  }
  return out;
}

ConeField ConeField::constant(ConeSpec cone) {
  const int d = cone.dim();
  ConeField f(Kind::Constant, d, std::move(cone));
  f.solid_ = f.base_cone_.is_solid();
  return f;
}

ConeField ConeField::transported(Manifold manifold, Point base, ConeSpec base_cone,
                                 TransportMap transport) {
  if (base.dim() != manifold.dim() || base_cone.dim() != manifold.dim()) {
    throw ArgumentError("transported cone field: dimension mismatch");
  }
  manifold.require_point(base);
  ConeField f(Kind::Transported, manifold.dim(), std::move(base_cone));
  f.base_point_ = std::move(base);
  f.manifold_ = std::make_shared<const Manifold>(std::move(manifold));
  f.transport_ = std::make_shared<const TransportMap>(std::move(transport));
  f.solid_ = f.base_cone_.is_solid();
  return f;
}

ConeField ConeField::custom(int dim, ConeFn fn) {
  if (!fn) throw ArgumentError("custom cone field requires a callback");
  ConeField f(Kind::CustomChart, dim, ConeSpec::orthant(dim));
  f.fn_ = std::move(fn);
  return f;
}

const ConeSpec* ConeField::constant_cone() const {
  return kind_ == Kind::Constant ? &base_cone_ : nullptr;
}

bool ConeField::is_loewner() const {
  if (base_cone_.kind() != ConeSpec::Kind::PSD) return false;
  if (kind_ == Kind::Constant) return true;
  return kind_ == Kind::Transported && transport_->rule() == TransportMap::Rule::SPDCongruence;
}

ConeSpec ConeField::cone_at(const Point& x) const {
  if (x.dim() != dim_) throw ArgumentError("cone field queried at a point of the wrong dimension");
  switch (kind_) {
    case Kind::Constant:
      return base_cone_;
    case Kind::CustomChart: {
      ConeSpec c = fn_(x);
      if (c.dim() != dim_) throw ArgumentError("custom cone field returned the wrong dimension");
      return c;
    }
    case Kind::Transported: {
      if (x == base_point_ || transport_->rule() == TransportMap::Rule::Identity) return base_cone_;
      // Congruence maps the PSD cone onto itself.
      if (is_loewner()) {
        manifold_->require_point(x);
        return base_cone_;
      }
      const Mat a = transport_->matrix(*manifold_, base_point_, x);
      switch (base_cone_.kind()) {
        case ConeSpec::Kind::Orthant:
        case ConeSpec::Kind::Halfspaces: {
          const Mat ait = a.inverse().transpose();
          std::vector<Vec> normals;
          for (const auto& n : base_cone_.facet_normals()) normals.push_back(ait * n);
          return ConeSpec::halfspaces(std::move(normals));
        }
        case ConeSpec::Kind::Generators: {
          std::vector<Vec> gens;
          for (const auto& g : base_cone_.extreme_rays()) gens.push_back(a * g);
          return ConeSpec::generators(std::move(gens));
        }
        default:
          return ConeSpec::linear_image(a, base_cone_);
      }
    }
  }
  return base_cone_;
}

double ConeField::margin(const Point& x, const Vec& v) const { return cone_at(x).margin(v); }

Vec ConeField::interior_direction(const Point& x) const {
  return cone_at(x).interior_direction();
}

MembershipVerdict contains(const ConeField& field, const Point& x, const TangentVector& v,
                           double tol) {
  if (!(v.base == x)) throw ArgumentError("tangent vector is not based at the query point");
  if (v.components.size() != field.dim()) throw ArgumentError("tangent vector dimension mismatch");
  return classify_margin(field.margin(x, v.components), tol);
}

double interior_margin(const ConeField& field, const Point& x, const TangentVector& v) {
  return contains(field, x, v).margin;
}

SemicontinuityReport semicontinuity_probe(const Manifold& manifold, const ConeField& field,
                                          const Point& x, double radius, int n_samples,
                                          std::uint64_t seed, double slack) {
  if (!(radius > 0.0)) throw ArgumentError("semicontinuity probe radius must be > 0");
  SemicontinuityReport rep;
  rep.slack = slack;
  Rng rng(seed);
  const int d = field.dim();
  const ConeSpec cx = field.cone_at(x);
  const Vec cdir = cx.interior_direction();
  std::vector<Vec> interior_dirs{cdir};
  for (const auto& r : cx.boundary_rays(2 * d, derive_seed(seed, {1}))) {
    interior_dirs.push_back((cdir + r).normalized());
  }
  for (int s = 0; s < n_samples; ++s) {
    const Vec offset = unit_vector(rng, d) * radius * std::pow(uniform01(rng), 1.0 / d);
    const Point y{x.coords + offset};
    if (!manifold.in_domain(y.coords)) continue;
    ++rep.samples;
    const ConeSpec cy = field.cone_at(y);

    auto rays = cy.boundary_rays(2 * d, derive_seed(seed, {2, static_cast<std::uint64_t>(s)}));
    rays.push_back(cy.interior_direction());
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : rays) worst = std::min(worst, cx.margin(r));
    if (!(worst > -slack)) {
      ++rep.upper_violations;
      rep.worst_upper = std::min(rep.worst_upper, worst + slack);
    }

    const Vec cy_dir = cy.interior_direction();
    for (const auto& u : interior_dirs) {
      bool found = false;
      for (int k = 0; k <= 8 && !found; ++k) {
        const Vec w = (u + (slack * k / 8.0) * cy_dir).normalized();
        if ((w - u).norm() <= slack && cy.margin(w) >= 0.0) found = true;
      }
      if (!found) {
        ++rep.lower_violations;
        rep.worst_lower = std::min(rep.worst_lower, cy.margin(u));
      }
    }
  }
  return rep;
}

}  // namespace dpflow
