#include "dpflow/order.hpp"

#include <algorithm>
#include <cmath>

#include "dpflow/errors.hpp"
#include "dpflow/rng.hpp"

namespace dpflow {

const char* to_string(Relation r) {
  switch (r) {
    case Relation::StrictlyLess: return "StrictlyLess";
    case Relation::Less: return "Less";
    case Relation::Incomparable: return "Incomparable";
    case Relation::Undecided: return "Undecided";
  }
  return "?";
}

const char* to_string(OrderOracle o) {
  switch (o) {
    case OrderOracle::AnalyticConstant: return "AnalyticConstant";
    case OrderOracle::Loewner: return "Loewner";
    case OrderOracle::CurveSearch: return "CurveSearch";
  }
  return "?";
}

namespace {

void require_pair(const Manifold& m, const ConeField& field, const Point& x, int y_dim) {
  if (x.dim() != y_dim) throw ArgumentError("order query mixes points of different manifolds");
  if (x.dim() != m.dim() || field.dim() != m.dim()) {
    throw ArgumentError("order query dimension does not match the manifold");
  }
}

Relation relation_from_margin(double margin) {
  if (margin > kStrictTol) return Relation::StrictlyLess;
  if (margin >= -kStrictTol) return Relation::Less;
  return Relation::Incomparable;
}

double step_size(const OrderBudget& b) {
  if (!(b.target_radius > 0.0)) throw ArgumentError("order budget needs target_radius > 0");
  return b.step > 0.0 ? b.step : 0.5 * b.target_radius;
}

OrderVerdict analytic(OrderOracle oracle, double margin) {
  OrderVerdict v;
  v.oracle = oracle;
  v.min_margin = margin;
  v.relation = relation_from_margin(margin);
  return v;
}

OrderVerdict from_search(std::optional<ConalCurve> curve) {
  OrderVerdict v;
  v.oracle = OrderOracle::CurveSearch;
  if (!curve) return v;
  v.min_margin = curve->min_margin;
  v.relation = curve->min_margin >= kStrictTol ? Relation::StrictlyLess : Relation::Less;
  v.witness = std::move(curve);
  return v;
}

}  // namespace

OrderVerdict compare_offset(const Manifold& m, const ConeField& field, const Point& x,
                            const Vec& delta, const OrderBudget& budget) {
  require_pair(m, field, x, static_cast<int>(delta.size()));
  if (delta.isZero(0.0)) {
    OrderVerdict v;
    v.relation = Relation::Less;
    v.equality = true;
    v.oracle = field.kind() == ConeField::Kind::Constant ? OrderOracle::AnalyticConstant
               : field.is_loewner()                      ? OrderOracle::Loewner
                                                         : OrderOracle::CurveSearch;
    return v;
  }
  if (const ConeSpec* k = field.constant_cone(); k && m.kind() == Manifold::Kind::Euclidean) {
    return analytic(OrderOracle::AnalyticConstant, k->margin(delta));
  }
  if (m.kind() == Manifold::Kind::SPD && field.is_loewner()) {
    m.require_point(x);
    m.require_point(Point{x.coords + delta});
    return analytic(OrderOracle::Loewner, ConeSpec::psd(m.matrix_size()).margin(delta));
  }
  return from_search(conal_curve_search(m, field, x, Point{x.coords + delta}, budget));
}

OrderVerdict compare(const Manifold& m, const ConeField& field, const Point& x, const Point& y,
                     const OrderBudget& budget) {
  require_pair(m, field, x, y.dim());
  if (x == y) return compare_offset(m, field, x, Vec::Zero(x.dim()), budget);
  const bool analytic_case =
      (field.constant_cone() && m.kind() == Manifold::Kind::Euclidean) ||
      (m.kind() == Manifold::Kind::SPD && field.is_loewner());
  if (analytic_case) return compare_offset(m, field, x, y.coords - x.coords, budget);
  return from_search(conal_curve_search(m, field, x, y, budget));
}

OrderVerdict compare(const SystemSpec& sys, const Point& x, const Point& y,
                     const OrderBudget& budget) {
  return compare(sys.manifold, sys.cone_field, x, y, budget);
}

OrderVerdict compare_offset(const SystemSpec& sys, const Point& x, const Vec& delta,
                            const OrderBudget& budget) {
  return compare_offset(sys.manifold, sys.cone_field, x, delta, budget);
}

std::optional<ConalCurve> conal_curve_search(const Manifold& m, const ConeField& field,
                                             const Point& x, const Point& y,
                                             const OrderBudget& budget) {
  require_pair(m, field, x, y.dim());
  const double h = step_size(budget);
  const double d0 = m.distance(x, y);
  ConalCurve curve;
  curve.nodes.push_back(x);
  std::vector<double> margins;
  int steps = 0;

  auto push = [&](Point next, const Vec& u, double margin) {
    curve.tangents.push_back(tangent(curve.nodes.back(), u));
    curve.nodes.push_back(std::move(next));
    margins.push_back(margin);
    ++steps;
  };
  auto truncate = [&](std::size_t nodes) {
    curve.nodes.resize(nodes);
    curve.tangents.resize(nodes - 1);
    margins.resize(nodes - 1);
  };
  auto finish = [&]() {
    curve.min_margin = margins.empty() ? 0.0 : *std::min_element(margins.begin(), margins.end());
    return curve;
  };

  // Greedy steering toward y; false on a dead end.
  auto greedy = [&]() {
    while (steps < budget.max_steps) {
      const Point& p = curve.nodes.back();
      if (m.distance(p, y) < budget.target_radius) return true;
      const Vec d = y.coords - p.coords;
      const ConeSpec cone = field.cone_at(p);
      Vec u = cone.project(d);
      const double len = u.norm();
      if (!(len > 0.0) || !(u.dot(d) > 0.0)) return false;
      u /= len;
      const double margin = cone.margin(u);
      if (margin < -kStrictTol) return false;
      // Land exactly on y when it is straight ahead.
      const double dist = d.norm();
      const double length = u.dot(d) >= dist * (1.0 - 1e-12) ? std::min(h, dist) : h;
      Point next{p.coords + length * u};
      if (!m.in_domain(next.coords)) return false;
      if ((y.coords - next.coords).norm() >= dist) return false;  // no progress
      push(std::move(next), u, margin);
    }
    return false;
  };

  // On a dead end, back up and move along the cone axis before retrying, so
  // that targets reachable only by a detour are still found.
  constexpr int kMaxDetours = 32;
  const double detour = 0.25 * std::max(d0, budget.target_radius);
  for (int attempt = 0;; ++attempt) {
    const std::size_t anchor = curve.nodes.size();
    if (greedy()) return finish();
    truncate(anchor);
    if (attempt == kMaxDetours || steps >= budget.max_steps) return std::nullopt;
    for (double moved = 0.0; moved < detour && steps < budget.max_steps; moved += h) {
      const Point& p = curve.nodes.back();
      const Vec u = field.interior_direction(p);
      const double margin = field.margin(p, u);
      if (!(margin > kStrictTol)) return std::nullopt;
      Point next{p.coords + h * u};
      if (!m.in_domain(next.coords)) return std::nullopt;
      if (m.distance(next, y) > 4.0 * d0 + budget.target_radius) return std::nullopt;
      push(std::move(next), u, margin);
    }
  }
}

std::vector<ViolationPair> antisymmetry_diagnostic(const Manifold& m, const ConeField& field,
                                                   const Box& region, int n_samples,
                                                   std::uint64_t seed, const OrderBudget& budget) {
  std::vector<ViolationPair> out;
  Rng rng(derive_seed(seed, {0xa5}));
  auto sample = [&]() {
    Vec p(region.dim());
    for (int i = 0; i < p.size(); ++i) p[i] = uniform(rng, region.lower[i], region.upper[i]);
    return Point{p};
  };
  for (int k = 0; k < n_samples; ++k) {
    const Point x = sample();
    const Point y = sample();
    if (!m.in_domain(x.coords) || !m.in_domain(y.coords)) continue;
    if (m.distance(x, y) <= 10.0 * budget.target_radius) continue;
    if (is_ordered(compare(m, field, x, y, budget).relation) &&
        is_ordered(compare(m, field, y, x, budget).relation)) {
      out.push_back({x, y});
    }
  }
  return out;
}

QuasiClosednessReport quasi_closedness_probe(const Manifold& m, const ConeField& field,
                                             const std::vector<PairSequence>& sequences,
                                             const OrderBudget& budget) {
  QuasiClosednessReport r;
  for (const auto& seq : sequences) {
    ++r.sequences;
    bool valid = seq.xs.size() == seq.ys.size() && !seq.xs.empty();
    for (std::size_t i = 0; valid && i < seq.xs.size(); ++i) {
      valid = compare(m, field, seq.xs[i], seq.ys[i], budget).relation == Relation::StrictlyLess;
    }
    if (!valid) {
      ++r.invalid_sequences;
      continue;
    }
    if (!m.in_domain(seq.x_limit) || !m.in_domain(seq.y_limit)) {
      ++r.undecided;
      ++r.domain_exits;
      continue;
    }
    const Relation rel = compare(m, field, Point{seq.x_limit}, Point{seq.y_limit}, budget).relation;
    if (is_ordered(rel)) ++r.holds;
    else if (rel == Relation::Incomparable) ++r.violations;
    else ++r.undecided;
  }
  return r;
}

}  // namespace dpflow
