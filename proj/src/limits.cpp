#include "dpflow/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpflow/errors.hpp"
#include "dpflow/parallel.hpp"
#include "dpflow/rng.hpp"

namespace dpflow {

const char* to_string(OmegaClass c) {
  switch (c) {
    case OmegaClass::ConvergedTo: return "ConvergedTo";
    case OmegaClass::PeriodicOrbit: return "PeriodicOrbit";
    case OmegaClass::Escaped: return "Escaped";
    case OmegaClass::Undecided: return "Undecided";
  }
  return "?";
}

namespace {

constexpr double kNewtonGate = 1e-2;  // |f| below which an equilibrium is sought

void validate(const OmegaBudget& b) {
  if (!(b.t_max > 0.0) || !(b.eps_conv > 0.0) || !(b.recurrence_tol > 0.0) ||
      !(b.sample_dt > 0.0) || !(b.window >= 0.0) || b.n_samples < 1) {
    throw ArgumentError("omega budget entries must be positive");
  }
}

OdeRhs rhs_of(const SystemSpec& sys) {
  return [&sys](const std::vector<double>& x, std::vector<double>& dx, double) {
    sys.f(std::span<const double>(x), std::span<double>(dx));
  };
}

Vec as_vec(const std::vector<double>& s) { return Eigen::Map<const Vec>(s.data(), s.size()); }

std::vector<Point> tail(const std::vector<Vec>& samples, int k) {
  std::vector<Point> out;
  const std::size_t start = samples.size() > static_cast<std::size_t>(k) ? samples.size() - k : 0;
  for (std::size_t i = start; i < samples.size(); ++i) out.push_back(Point{samples[i]});
  return out;
}

// |phi_tau(z0) - z| for tau in [0, span], minimized by golden-section search.
struct ReturnSearch {
  double tau = 0.0;
  double distance = std::numeric_limits<double>::infinity();
};

ReturnSearch refine_return(const SystemSpec& sys, const Vec& z0, const Vec& z, double span,
                           const IntegratorOptions& opts) {
  auto g = [&](double tau) {
    if (tau <= 0.0) return (z0 - z).norm();
    return (flow_to(sys, Point{z0}, tau, opts).point.coords - z).norm();
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = span;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 60 && b - a > 1e-12 * (1.0 + span); ++it) {
    if (gc < gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - phi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + phi * (b - a);
      gd = g(d);
    }
  }
  ReturnSearch r;
  r.tau = 0.5 * (a + b);
  r.distance = g(r.tau);
  return r;
}

// Periodic orbit through the last sample, if the second half of the samples
// returns close to it after at least the minimal period.
bool detect_periodic(const SystemSpec& sys, const std::vector<Vec>& samples, const OmegaBudget& b,
                     OmegaEstimate& est) {
  const std::size_t m = samples.size();
  if (m < 4) return false;
  const Vec& z = samples.back();
  const std::size_t last = m - 1;
  const std::size_t max_lag = last - m / 2;
  const auto floor_lag = static_cast<std::size_t>(std::ceil(b.min_period() / b.sample_dt));
  if (max_lag < floor_lag + 1) return false;
  const double speed = sys.eval(z).norm();
  const double coarse = 2.0 * speed * b.sample_dt + b.recurrence_tol;
  auto dist = [&](std::size_t lag) { return (samples[last - lag] - z).norm(); };

  double spread = 0.0;
  for (std::size_t i = m / 2; i < m; ++i) spread = std::max(spread, (samples[i] - z).norm());
  if (spread < 10.0 * b.recurrence_tol) return false;

  for (std::size_t lag = floor_lag; lag < max_lag; ++lag) {
    const double dl = dist(lag);
    if (dl >= coarse || dl > dist(lag - 1) || dl > dist(lag + 1)) continue;
    // Start one sample before the candidate return and search a two-sample span.
    const Vec& z0 = samples[last - lag - 1];
    const ReturnSearch r = refine_return(sys, z0, z, 2.0 * b.sample_dt, b.integrator);
    if (r.distance >= b.recurrence_tol) continue;
    const double period = (static_cast<double>(lag) + 1.0) * b.sample_dt - r.tau;
    if (period < b.min_period()) continue;
    est.cls = OmegaClass::PeriodicOrbit;
    est.period = period;
    est.resolution = period / b.n_samples;
    est.omega_samples.clear();
    Point p{z};
    for (int k = 0; k < b.n_samples; ++k) {
      est.omega_samples.push_back(p);
      p = flow_to(sys, p, est.resolution, b.integrator).point;
    }
    est.diagnostic = "return distance " + std::to_string(r.distance);
    return true;
  }
  return false;
}

}  // namespace

OmegaEstimate omega_estimate(const SystemSpec& sys, const Point& x, const OmegaBudget& b) {
  validate(b);
  sys.manifold.require_point(x);
  const int n = sys.dim();
  OmegaEstimate est;
  est.resolution = b.sample_dt;
  Dopri5 stepper(rhs_of(sys), n, b.integrator, n);
  std::vector<double> state(x.coords.data(), x.coords.data() + n);
  double t = 0.0;
  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(b.t_max / b.sample_dt) + 2);
  samples.push_back(x.coords);

  std::optional<Point> candidate;
  double adopted_distance = 0.0;
  double entered = -1.0;
  double last_newton = std::numeric_limits<double>::infinity();
  const auto chunks = static_cast<long>(std::ceil(b.t_max / b.sample_dt - 1e-9));

  auto finish = [&](OmegaClass cls) {
    est.cls = cls;
    est.budget_used = t;
    est.residual = sys.eval(samples.back()).norm();
    if (cls != OmegaClass::ConvergedTo && cls != OmegaClass::PeriodicOrbit) {
      est.omega_samples = tail(samples, b.n_samples);
    }
    return est;
  };

  try {
    for (long k = 1; k <= chunks; ++k) {
      const double t_end = std::min(static_cast<double>(k) * b.sample_dt, b.t_max);
      const AdvanceStatus status = stepper.advance(state, t, t_end);
      samples.push_back(as_vec(state));
      if (status == AdvanceStatus::Escaped || !sys.manifold.in_domain(samples.back())) {
        est.diagnostic = "left the escape bound";
        return finish(OmegaClass::Escaped);
      }
      const Vec& p = samples.back();
      if (candidate) {
        const double d = (p - candidate->coords).norm();
        if (d < b.eps_conv) {
          if (entered < 0.0) entered = t;
          if (t - entered >= b.window - 1e-9) {
            est.equilibrium = candidate;
            est.omega_samples = {*candidate};
            est.resolution = 0.0;
            return finish(OmegaClass::ConvergedTo);
          }
        } else {
          entered = -1.0;
          if (d > 2.0 * adopted_distance + b.eps_conv) {
            candidate.reset();
            last_newton = std::numeric_limits<double>::infinity();
          }
        }
        continue;
      }
      const double fp = sys.eval(p).norm();
      if (fp < kNewtonGate && fp < 0.5 * last_newton) {
        last_newton = fp;
        if (auto e = refine_equilibrium(sys, Point{p})) {
          const double d = (p - e->coords).norm();
          if (d < 0.5) {
            candidate = std::move(e);
            adopted_distance = d;
            if (d < b.eps_conv) entered = t;
          }
        }
      }
    }
  } catch (const NumericError& e) {
    est.diagnostic = std::string("integration failed: ") + e.what();
    return finish(OmegaClass::Undecided);
  } catch (const DomainError& e) {
    est.diagnostic = std::string("left the chart domain: ") + e.what();
    return finish(OmegaClass::Undecided);
  }

  if (candidate && entered >= 0.0) {
    est.diagnostic = "within eps_conv of an equilibrium but the window did not complete";
    return finish(OmegaClass::Undecided);
  }
  try {
    if (detect_periodic(sys, samples, b, est)) {
      est.budget_used = t;
      est.residual = sys.eval(samples.back()).norm();
      return est;
    }
  } catch (const NumericError& e) {
    est.diagnostic = std::string("period refinement failed: ") + e.what();
  }
  if (est.diagnostic.empty()) est.diagnostic = "budget exhausted";
  return finish(OmegaClass::Undecided);
}

namespace {

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

}  // namespace

double omega_invariance_residual(const SystemSpec& sys, const OmegaEstimate& omega, double s,
                                 const IntegratorOptions& opts) {
  switch (omega.cls) {
    case OmegaClass::ConvergedTo: {
      const Point& e = *omega.equilibrium;
      return (flow_to(sys, e, s, opts).point.coords - e.coords).norm();
    }
    case OmegaClass::PeriodicOrbit: {
      constexpr int kDense = 4096;
      std::vector<Vec> orbit;
      orbit.reserve(kDense + 1);
      Point p = omega.omega_samples.front();
      for (int k = 0; k <= kDense; ++k) {
        orbit.push_back(p.coords);
        p = flow_to(sys, p, omega.period / kDense, opts).point;
      }
      double worst = 0.0;
      for (const auto& q : omega.omega_samples) {
        const Vec img = flow_to(sys, q, s, opts).point.coords;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < kDense; ++k) {
          best = std::min(best, point_segment_distance(img, orbit[k], orbit[k + 1]));
        }
        worst = std::max(worst, best);
      }
      return worst;
    }
    default:
      throw ArgumentError("omega invariance needs a decided estimate");
  }
}

void merge(PropertyReport& into, const PropertyReport& other) {
  if (into.property.empty()) into.property = other.property;
  if (into.tested == 0 && into.skipped == 0) into.vacuous = other.vacuous;
  else into.vacuous = into.vacuous && other.vacuous;
  into.tested += other.tested;
  into.pass += other.pass;
  into.fail += other.fail;
  into.undecided += other.undecided;
  into.skipped += other.skipped;
  if (!into.witness && other.witness) into.witness = other.witness;
  for (const auto& [k, v] : other.extras) into.extras[k] += v;
}

namespace {

std::vector<double> positive_sorted(std::vector<double> grid) {
  grid.erase(std::remove_if(grid.begin(), grid.end(), [](double t) { return !(t > 0.0); }),
             grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

PropertyReport single(std::string name) {
  PropertyReport r;
  r.property = std::move(name);
  r.tested = 1;
  return r;
}

bool decided(const OmegaEstimate& e) {
  return e.cls == OmegaClass::ConvergedTo || e.cls == OmegaClass::PeriodicOrbit;
}

}  // namespace

std::vector<PointPair> sample_ordered_pairs(const SystemSpec& sys, const Box& region,
                                            std::size_t n, std::uint64_t seed, double max_length) {
  if (!(max_length > 0.0)) throw ArgumentError("max_length must be positive");
  std::vector<PointPair> out;
  out.reserve(n);
  const int d = sys.dim();
  for (std::size_t i = 0; out.size() < n; ++i) {
    if (i > 100 * n + 1000) throw DomainError("could not sample ordered pairs in the region");
    Rng rng(derive_seed(seed, {0x0b, i}));
    Vec x(d);
    for (int k = 0; k < d; ++k) x[k] = uniform(rng, region.lower[k], region.upper[k]);
    if (!sys.manifold.in_domain(x)) continue;
    const ConeSpec cone = sys.cone_field.cone_at(Point{x});
    const auto rays = cone.boundary_rays(d, rng());
    Vec dir = Vec::Zero(d);
    if (uniform01(rng) < 0.1) {
      dir = rays[rng() % rays.size()];
    } else {
      for (const auto& r : rays) dir += uniform01(rng) * r;
      dir += uniform01(rng) * cone.interior_direction();
    }
    if (dir.norm() < 1e-12) continue;
    const Vec y = x + uniform(rng, 0.05, 1.0) * max_length * dir.normalized();
    if (!sys.manifold.in_domain(y)) continue;
    out.emplace_back(Point{x}, Point{y});
  }
  return out;
}

PropertyReport monotone_flow_check(const SystemSpec& sys, const std::vector<PointPair>& pairs,
                                   const std::vector<double>& t_grid,
                                   const IntegratorOptions& opts, unsigned threads) {
  const std::vector<double> grid = positive_sorted(t_grid);
  if (grid.empty()) throw ArgumentError("monotone_flow_check needs a positive time");
  std::vector<PropertyReport> parts(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    PropertyReport& r = parts[i];
    r.property = "monotone_flow";
    const auto& [x, y] = pairs[i];
    if (!is_ordered(compare(sys, x, y).relation)) {
      ++r.skipped;
      return;
    }
    r.tested = 1;
    std::vector<PairFlow> flows;
    try {
      flows = flow_pair_grid(sys, x, y, grid, opts);
    } catch (const NumericError&) {
      ++r.undecided;
      return;
    }
    bool undecided = false;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (flows[k].status == FlowStatus::Escaped) {
        undecided = true;
        break;
      }
      const OrderVerdict v = compare_offset(sys, flows[k].x, flows[k].delta);
      if (v.relation == Relation::StrictlyLess) continue;
      if (v.relation == Relation::Undecided) {
        undecided = true;
        continue;
      }
      ++r.fail;
      r.witness = PropertyWitness{{x, y, flows[k].x, Point{flows[k].x.coords + flows[k].delta}},
                                  grid[k], v.min_margin,
                                  std::string("relation ") + to_string(v.relation)};
      return;
    }
    ++(undecided ? r.undecided : r.pass);
  });
  PropertyReport out;
  out.property = "monotone_flow";
  for (const auto& p : parts) merge(out, p);
  return out;
}

PropertyReport nonordering_check(const SystemSpec& sys, const OmegaEstimate& omega) {
  PropertyReport r;
  r.property = "nonordering";
  const auto& s = omega.omega_samples;
  if (omega.cls == OmegaClass::ConvergedTo || s.size() < 2) {
    r.vacuous = true;
    return r;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (s[i] == s[j]) continue;
      ++r.tested;
      const OrderVerdict a = compare(sys, s[i], s[j]);
      const OrderVerdict b = compare(sys, s[j], s[i]);
      if (is_ordered(a.relation) || is_ordered(b.relation)) {
        ++r.fail;
        if (!r.witness) {
          const bool forward = is_ordered(a.relation);
          r.witness = PropertyWitness{{forward ? s[i] : s[j], forward ? s[j] : s[i]}, 0.0,
                                      forward ? a.min_margin : b.min_margin, "ordered omega samples"};
        }
      } else if (a.relation == Relation::Incomparable && b.relation == Relation::Incomparable) {
        ++r.pass;
      } else {
        ++r.undecided;
      }
    }
  }
  return r;
}

PropertyReport intersection_check(const SystemSpec& sys, const Point& x, const Point& y,
                                  const OmegaBudget& budget) {
  PropertyReport r = single("intersection");
  const OmegaEstimate ox = omega_estimate(sys, x, budget);
  const OmegaEstimate oy = omega_estimate(sys, y, budget);
  if (!decided(ox) || !decided(oy)) {
    ++r.undecided;
    return r;
  }
  bool any_common = false;
  for (const auto& p : ox.omega_samples) {
    for (const auto& q : oy.omega_samples) {
      if ((p.coords - q.coords).norm() >= budget.eps_conv) continue;
      any_common = true;
      const double res = sys.eval(p.coords).norm();
      if (res >= 10.0 * budget.eps_conv) {
        ++r.fail;
        r.witness = PropertyWitness{{x, y, p}, 0.0, res, "common omega point is not an equilibrium"};
        return r;
      }
    }
  }
  r.vacuous = !any_common;
  ++r.pass;
  return r;
}

PropertyReport dichotomy_check(const SystemSpec& sys, const Point& x, const Point& y,
                               const OmegaBudget& budget) {
  PropertyReport r;
  r.property = "dichotomy";
  if (!is_ordered(compare(sys, x, y).relation)) {
    ++r.skipped;
    return r;
  }
  r.tested = 1;
  const OmegaEstimate ox = omega_estimate(sys, x, budget);
  const OmegaEstimate oy = omega_estimate(sys, y, budget);
  if (!decided(ox) || !decided(oy)) {
    ++r.undecided;
    return r;
  }
  if (ox.cls == OmegaClass::ConvergedTo && oy.cls == OmegaClass::ConvergedTo &&
      (ox.equilibrium->coords - oy.equilibrium->coords).norm() < 10.0 * budget.eps_conv) {
    ++r.pass;
    r.extras["branch_a"] = 1;
    return r;
  }
  bool undecided = false;
  for (const auto& p : ox.omega_samples) {
    for (const auto& q : oy.omega_samples) {
      const OrderVerdict v = compare(sys, p, q);
      if (v.relation == Relation::StrictlyLess) continue;
      if (v.relation == Relation::Undecided) {
        undecided = true;
        continue;
      }
      ++r.fail;
      r.witness = PropertyWitness{{x, y, p, q}, 0.0, v.min_margin,
                                  std::string("cross pair ") + to_string(v.relation)};
      return r;
    }
  }
  if (undecided) {
    ++r.undecided;
  } else {
    ++r.pass;
    r.extras["branch_b"] = 1;
  }
  return r;
}

PropertyReport dichotomy_suite(const SystemSpec& sys, const std::vector<PointPair>& pairs,
                               const OmegaBudget& budget, unsigned threads) {
  std::vector<PropertyReport> parts(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    parts[i] = dichotomy_check(sys, pairs[i].first, pairs[i].second, budget);
  });
  PropertyReport out;
  out.property = "dichotomy";
  out.extras["branch_a"] = 0;
  out.extras["branch_b"] = 0;
  for (const auto& p : parts) merge(out, p);
  return out;
}

PropertyReport order_recurrence_check(const SystemSpec& sys, const Point& x, double T,
                                      const OmegaBudget& budget) {
  PropertyReport r;
  r.property = "order_recurrence";
  if (!(T > 0.0)) throw ArgumentError("order_recurrence_check needs T > 0");
  const FlowEnd end = flow_to(sys, x, T, budget.integrator);
  if (end.status == FlowStatus::Escaped) {
    r.tested = 1;
    ++r.undecided;
    return r;
  }
  const OrderVerdict v = compare_offset(sys, x, end.point.coords - x.coords);
  if (v.equality) {
    r.vacuous = true;
    return r;
  }
  if (!is_ordered(v.relation)) {
    ++r.skipped;
    return r;
  }
  r.tested = 1;
  const OmegaEstimate om = omega_estimate(sys, x, budget);
  if (om.cls == OmegaClass::ConvergedTo) {
    ++r.pass;
  } else if (om.cls == OmegaClass::Undecided) {
    ++r.undecided;
  } else {
    ++r.fail;
    r.witness = PropertyWitness{{x, end.point}, T, v.min_margin,
                                std::string("omega class ") + to_string(om.cls)};
  }
  return r;
}

PropertyReport order_openness_probe(const SystemSpec& sys, const Point& x, const Point& y,
                                    double delta, int n, std::uint64_t seed,
                                    std::vector<double> t_grid, const IntegratorOptions& opts) {
  if (!(delta > 0.0) || n < 1) throw ArgumentError("order_openness_probe needs delta > 0, n >= 1");
  if (t_grid.empty()) {
    for (int k = 1; k <= 20; ++k) t_grid.push_back(0.05 * k);
    for (double t : {1.5, 2.0, 3.0, 5.0, 7.5, 10.0}) t_grid.push_back(t);
  }
  const std::vector<double> grid = positive_sorted(std::move(t_grid));
  PropertyReport r;
  r.property = "order_openness";
  Rng rng(derive_seed(seed, {0x09}));
  const int d = sys.dim();
  auto perturb = [&](const Point& p) {
    const double radius = delta * std::pow(uniform01(rng), 1.0 / d);
    return Point{p.coords + radius * unit_vector(rng, d)};
  };
  double t0 = 0.0;
  bool all_found = true;
  for (int k = 0; k < n; ++k) {
    const Point xp = perturb(x);
    const Point yp = perturb(y);
    ++r.tested;
    std::vector<PairFlow> flows;
    try {
      flows = flow_pair_grid(sys, xp, yp, grid, opts);
    } catch (const NumericError&) {
      ++r.undecided;
      all_found = false;
      continue;
    }
    // Earliest grid index from which every later verdict is StrictlyLess.
    std::ptrdiff_t first = static_cast<std::ptrdiff_t>(grid.size());
    bool undecided = false;
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(grid.size()) - 1; i >= 0; --i) {
      if (flows[i].status == FlowStatus::Escaped) {
        undecided = true;
        break;
      }
      const Relation rel = compare_offset(sys, flows[i].x, flows[i].delta).relation;
      if (rel == Relation::Undecided) undecided = true;
      if (rel != Relation::StrictlyLess) break;
      first = i;
    }
    if (first < static_cast<std::ptrdiff_t>(grid.size())) {
      ++r.pass;
      t0 = std::max(t0, grid[first]);
    } else if (undecided) {
      ++r.undecided;
      all_found = false;
    } else {
      ++r.fail;
      all_found = false;
      if (!r.witness) {
        r.witness = PropertyWitness{{xp, yp}, grid.back(), 0.0, "not strictly ordered at grid end"};
      }
    }
  }
  if (all_found) r.extras["t0"] = t0;
  return r;
}

}  // namespace dpflow
