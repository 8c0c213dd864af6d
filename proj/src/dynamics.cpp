#include "dpflow/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "dpflow/rng.hpp"

namespace dpflow {

namespace {

constexpr double kRealPartTol = 1e-9;

OdeRhs state_rhs(const SystemSpec& sys) {
  return [&sys](const std::vector<double>& x, std::vector<double>& dx, double) {
    sys.f(std::span<const double>(x), std::span<double>(dx));
  };
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Point to_point(const std::vector<double>& s, int n) {
  return Point{Eigen::Map<const Vec>(s.data(), n)};
}

void require_start(const SystemSpec& sys, const Point& x0) {
  if (!sys.f) throw ArgumentError("system '" + sys.name + "' has no vector field");
  sys.manifold.require_point(x0);
}

// Jointly integrates x and the column-major variational matrix J.
class VariationalStream {
 public:
  VariationalStream(const SystemSpec& sys, const Point& x0, const IntegratorOptions& opts)
      : sys_(sys), n_(sys.dim()), state_(n_ + n_ * n_, 0.0),
        stepper_(make_rhs(), state_.size(), opts, n_) {
    std::copy(x0.coords.data(), x0.coords.data() + n_, state_.begin());
    for (int i = 0; i < n_; ++i) state_[n_ + i * n_ + i] = 1.0;
  }

  FlowStatus advance_to(double t_end) {
    try {
      return stepper_.advance(state_, t_, t_end) == AdvanceStatus::Escaped ? FlowStatus::Escaped
                                                                            : FlowStatus::Completed;
    } catch (const StepUnderflow& e) {
      Trajectory partial;
      partial.times.push_back(e.time());
      partial.points.push_back(to_point(e.state(), n_));
      throw StiffnessError(std::move(partial));
    }
  }

  double time() const { return t_; }
  Point point() const { return to_point(state_, n_); }
  Mat matrix() const { return Eigen::Map<const Mat>(state_.data() + n_, n_, n_); }

 private:
  OdeRhs make_rhs() {
    return [this](const std::vector<double>& s, std::vector<double>& ds, double) {
      const Eigen::Map<const Vec> x(s.data(), n_);
      sys_.f(std::span<const double>(s.data(), n_), std::span<double>(ds.data(), n_));
      const Mat a = sys_.jacobian(x);
      const Eigen::Map<const Mat> j(s.data() + n_, n_, n_);
      Eigen::Map<Mat>(ds.data() + n_, n_, n_).noalias() = a * j;
    };
  }

  const SystemSpec& sys_;
  int n_;
  std::vector<double> state_;
  double t_ = 0.0;
  Dopri5 stepper_;
};

}  // namespace

Vec SystemSpec::eval(const Vec& x) const {
  Vec out(x.size());
  f(std::span<const double>(x.data(), x.size()), std::span<double>(out.data(), out.size()));
  return out;
}

Mat SystemSpec::jacobian(const Vec& x) const {
  if (df) return df(x);
  return finite_difference_jacobian(f, x);
}

Mat finite_difference_jacobian(const VectorField& f, const Vec& x) {
  const int n = static_cast<int>(x.size());
  const double h = 1e-6 * (1.0 + x.norm());
  Mat jac(n, n);
  Vec xp = x, xm = x, fp(n), fm(n);
  for (int j = 0; j < n; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    f(std::span<const double>(xp.data(), n), std::span<double>(fp.data(), n));
    f(std::span<const double>(xm.data(), n), std::span<double>(fm.data(), n));
    jac.col(j) = (fp - fm) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return jac;
}

const char* to_string(FlowStatus s) {
  return s == FlowStatus::Completed ? "completed" : "escaped";
}

Trajectory flow(const SystemSpec& sys, const Point& x0, double T, const IntegratorOptions& opts) {
  require_start(sys, x0);
  if (!std::isfinite(T)) throw ArgumentError("flow time must be finite");
  const int n = sys.dim();
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.points.push_back(x0);
  if (T == 0.0) return traj;

  Dopri5 stepper(state_rhs(sys), n, opts, n);
  std::vector<double> x = to_std(x0.coords);
  double t = 0.0;
  auto record = [&traj, n](double ts, const std::vector<double>& xs) {
    traj.times.push_back(ts);
    traj.points.push_back(to_point(xs, n));
  };
  try {
    if (stepper.advance(x, t, T, record) == AdvanceStatus::Escaped) traj.status = FlowStatus::Escaped;
  } catch (const StepUnderflow&) {
    traj.diagnostics = stepper.diagnostics();
    throw StiffnessError(std::move(traj));
  }
  traj.diagnostics = stepper.diagnostics();
  return traj;
}

FlowEnd flow_to(const SystemSpec& sys, const Point& x0, double T, const IntegratorOptions& opts) {
  require_start(sys, x0);
  if (!std::isfinite(T)) throw ArgumentError("flow time must be finite");
  FlowEnd end{x0, 0.0, FlowStatus::Completed};
  if (T == 0.0) return end;
  const int n = sys.dim();
  Dopri5 stepper(state_rhs(sys), n, opts, n);
  std::vector<double> x = to_std(x0.coords);
  double t = 0.0;
  try {
    if (stepper.advance(x, t, T) == AdvanceStatus::Escaped) end.status = FlowStatus::Escaped;
  } catch (const StepUnderflow& e) {
    Trajectory partial;
    partial.times.push_back(e.time());
    partial.points.push_back(to_point(e.state(), n));
    throw StiffnessError(std::move(partial));
  }
  end.point = to_point(x, n);
  end.t = t;
  return end;
}

std::pair<Point, FlowLinearization> variational_flow(const SystemSpec& sys, const Point& x0,
                                                     double T, const IntegratorOptions& opts) {
  require_start(sys, x0);
  if (!(T >= 0.0) || !std::isfinite(T)) throw ArgumentError("variational flow needs finite T >= 0");
  VariationalStream stream(sys, x0, opts);
  if (stream.advance_to(T) == FlowStatus::Escaped) {
    throw NumericError("trajectory escaped before t = " + std::to_string(T));
  }
  return {stream.point(), FlowLinearization{x0, T, stream.matrix()}};
}

namespace {

class PairStream {
 public:
  PairStream(const SystemSpec& sys, const Point& x, const Point& y, const IntegratorOptions& opts)
      : sys_(sys), n_(sys.dim()), state_(2 * n_), fx_(n_), fy_(n_), shifted_(n_),
        stepper_(make_rhs(), 2 * n_, opts, n_, atol_scale(x, y)) {
    for (int i = 0; i < n_; ++i) {
      state_[i] = x.coords[i];
      state_[n_ + i] = y.coords[i] - x.coords[i];
    }
  }

  FlowStatus advance_to(double t_end) {
    try {
      return stepper_.advance(state_, t_, t_end) == AdvanceStatus::Escaped ? FlowStatus::Escaped
                                                                            : FlowStatus::Completed;
    } catch (const StepUnderflow& e) {
      Trajectory partial;
      partial.times.push_back(e.time());
      partial.points.push_back(to_point(e.state(), n_));
      throw StiffnessError(std::move(partial));
    }
  }

  PairFlow current(FlowStatus status) const {
    return PairFlow{to_point(state_, n_), Eigen::Map<const Vec>(state_.data() + n_, n_), status};
  }

 private:
  // The separation is controlled relative to its initial size.
  std::vector<double> atol_scale(const Point& x, const Point& y) const {
    std::vector<double> s(2 * n_, 1.0);
    const double d0 = (y.coords - x.coords).lpNorm<Eigen::Infinity>();
    for (int i = 0; i < n_; ++i) s[n_ + i] = d0 > 0.0 ? std::min(1.0, 1e-3 * d0) : 1.0;
    return s;
  }

  OdeRhs make_rhs() {
    return [this](const std::vector<double>& s, std::vector<double>& ds, double) {
      for (int i = 0; i < n_; ++i) shifted_[i] = s[i] + s[n_ + i];
      sys_.f(std::span<const double>(s.data(), n_), std::span<double>(fx_));
      sys_.f(std::span<const double>(shifted_), std::span<double>(fy_));
      for (int i = 0; i < n_; ++i) {
        ds[i] = fx_[i];
        ds[n_ + i] = fy_[i] - fx_[i];
      }
    };
  }

  const SystemSpec& sys_;
  int n_;
  std::vector<double> state_;
  std::vector<double> fx_, fy_, shifted_;
  double t_ = 0.0;
  Dopri5 stepper_;
};

}  // namespace

PairFlow flow_pair(const SystemSpec& sys, const Point& x, const Point& y, double T,
                   const IntegratorOptions& opts) {
  return flow_pair_grid(sys, x, y, {T}, opts).back();
}

std::vector<PairFlow> flow_pair_grid(const SystemSpec& sys, const Point& x, const Point& y,
                                     const std::vector<double>& t_grid,
                                     const IntegratorOptions& opts) {
  require_start(sys, x);
  require_start(sys, y);
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || (!t_grid.empty() && t_grid.front() < 0.0)) {
    throw ArgumentError("pair flow grid must be increasing and non-negative");
  }
  PairStream stream(sys, x, y, opts);
  std::vector<PairFlow> out;
  out.reserve(t_grid.size());
  FlowStatus status = FlowStatus::Completed;
  for (double t : t_grid) {
    if (status == FlowStatus::Completed) status = stream.advance_to(t);
    out.push_back(stream.current(status));
  }
  return out;
}

const char* to_string(DPVerdict v) {
  switch (v) {
    case DPVerdict::SDPConsistent: return "SDP-consistent";
    case DPVerdict::DPConsistent: return "DP-consistent";
    case DPVerdict::Violated: return "Violated";
  }
  return "?";
}

DPReport check_dp(const SystemSpec& sys, const Point& x0, std::vector<double> t_grid, int n_rays,
                  std::uint64_t seed, const IntegratorOptions& opts) {
  require_start(sys, x0);
  if (t_grid.empty()) throw ArgumentError("check_dp needs a non-empty time grid");
  std::sort(t_grid.begin(), t_grid.end());
  if (!(t_grid.front() > 0.0)) throw ArgumentError("check_dp time grid must be positive");
  if (n_rays < 1) throw ArgumentError("check_dp needs n_rays >= 1");

  const ConeSpec cone = sys.cone_field.cone_at(x0);
  DPReport report;
  report.base = x0;
  report.rays = cone.boundary_rays(std::max(n_rays, sys.dim()), seed);
  const std::size_t n_boundary = report.rays.size();
  // Interior probes: the interior direction and random positive mixes of it with boundary rays.
  const Vec center = cone.interior_direction();
  if (center.size() > 0 && cone.margin(center) > kStrictTol) {
    report.rays.push_back(center);
    Rng rng(derive_seed(seed, {0x1d}));
    for (std::size_t k = 0; k < n_boundary; ++k) {
      const Vec mix = (center + uniform(rng, 0.1, 2.0) * report.rays[k]).normalized();
      if (cone.margin(mix) > kStrictTol) report.rays.push_back(mix);
    }
  }

  VariationalStream stream(sys, x0, opts);
  report.min_margin = std::numeric_limits<double>::infinity();
  const DPSample* worst = nullptr;
  for (double t : t_grid) {
    if (stream.advance_to(t) == FlowStatus::Escaped) {
      throw NumericError("trajectory escaped before t = " + std::to_string(t));
    }
    const Point xt = stream.point();
    const ConeSpec cone_t = sys.cone_field.cone_at(xt);
    const Mat j = stream.matrix();
    for (std::size_t r = 0; r < report.rays.size(); ++r) {
      DPSample s;
      s.t = t;
      s.ray = static_cast<int>(r);
      s.boundary_ray = r < n_boundary;
      s.image = j * report.rays[r];
      s.margin = cone_t.margin(s.image);
      report.samples.push_back(std::move(s));
    }
  }
  for (const auto& s : report.samples) {
    if (s.margin < report.min_margin) {
      report.min_margin = s.margin;
      worst = &s;
    }
  }
  if (report.min_margin < -kStrictTol) {
    report.verdict = DPVerdict::Violated;
    report.witness = DPWitness{x0, worst->t, report.rays[worst->ray], worst->image, worst->margin};
  } else if (report.min_margin > kStrictTol) {
    report.verdict = DPVerdict::SDPConsistent;
  } else {
    report.verdict = DPVerdict::DPConsistent;
  }
  return report;
}

double cocycle_check(const SystemSpec& sys, const Point& x0, double t, double s,
                     const IntegratorOptions& opts) {
  if (t < 0.0 || s < 0.0) throw ArgumentError("cocycle_check needs t, s >= 0");
  const auto [xt, jt] = variational_flow(sys, x0, t, opts);
  const auto [xts, jts] = variational_flow(sys, x0, t + s, opts);
  const auto [xs, js] = variational_flow(sys, xt, s, opts);
  return (jts.matrix - js.matrix * jt.matrix).norm();
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Saddle: return "saddle";
    case Stability::Center: return "center";
    case Stability::NonHyperbolic: return "non-hyperbolic";
  }
  return "?";
}

int EquilibriumSet::find(const Vec& p, double radius) const {
  int best = -1;
  double best_d = radius;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double d = (items[i].point.coords - p).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::optional<Point> refine_equilibrium(const SystemSpec& sys, const Point& start, double tol,
                                        int max_iterations) {
  if (!sys.manifold.in_domain(start.coords)) return std::nullopt;
  Vec x = start.coords;
  Vec fx = sys.eval(x);
  double r = fx.norm();
  for (int it = 0; it < max_iterations && r >= 1e-3 * tol; ++it) {
    const Mat jac = sys.jacobian(x);
    Vec dx = jac.colPivHouseholderQr().solve(-fx);
    if (!dx.allFinite()) return std::nullopt;
    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-6) {
      const Vec trial = x + alpha * dx;
      if (sys.manifold.in_domain(trial)) {
        const Vec ft = sys.eval(trial);
        const double rt = ft.norm();
        if (std::isfinite(rt) && rt < (1.0 - 1e-4 * alpha) * r) {
          x = trial;
          fx = ft;
          r = rt;
          moved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  if (!(r < tol)) return std::nullopt;
  return Point{x};
}

Equilibrium describe_equilibrium(const SystemSpec& sys, const Point& e) {
  Equilibrium eq;
  eq.point = e;
  eq.residual = sys.eval(e.coords).norm();
  Eigen::EigenSolver<Mat> solver(sys.jacobian(e.coords), false);
  const auto& values = solver.eigenvalues();
  int negative = 0, positive = 0;
  bool rotating = false;
  for (int i = 0; i < values.size(); ++i) {
    eq.eigenvalues.push_back(values[i]);
    if (values[i].real() < -kRealPartTol) ++negative;
    else if (values[i].real() > kRealPartTol) ++positive;
    if (std::abs(values[i].imag()) > kRealPartTol) rotating = true;
  }
  std::sort(eq.eigenvalues.begin(), eq.eigenvalues.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  const int n = static_cast<int>(values.size());
  if (negative == n) eq.stability = Stability::Stable;
  else if (positive == n) eq.stability = Stability::Unstable;
  else if (negative + positive == n) eq.stability = Stability::Saddle;
  else if (negative + positive == 0 && rotating) eq.stability = Stability::Center;
  else eq.stability = Stability::NonHyperbolic;
  return eq;
}

EquilibriumSet find_equilibria(const SystemSpec& sys, const Box& region, int n_seeds,
                               std::uint64_t seed, double merge_radius) {
  if (n_seeds < 1) throw ArgumentError("find_equilibria needs n_seeds >= 1");
  if (region.dim() != sys.dim()) throw ArgumentError("region dimension does not match the system");
  EquilibriumSet set;
  set.merge_radius = merge_radius;
  Rng rng(derive_seed(seed, {0xe9}));
  const double slack = 1e-9 * (1.0 + region.width().maxCoeff());
  for (int k = 0; k <= n_seeds; ++k) {
    Vec start = region.center();
    if (k > 0) {
      for (int i = 0; i < start.size(); ++i) start[i] = uniform(rng, region.lower[i], region.upper[i]);
    }
    const auto root = refine_equilibrium(sys, Point{start});
    if (!root || !region.contains(root->coords, slack)) continue;
    if (set.find(root->coords, merge_radius) >= 0) continue;
    set.items.push_back(describe_equilibrium(sys, *root));
  }
  std::sort(set.items.begin(), set.items.end(), [](const Equilibrium& a, const Equilibrium& b) {
    return std::lexicographical_compare(a.point.coords.begin(), a.point.coords.end(),
                                        b.point.coords.begin(), b.point.coords.end());
  });
  return set;
}

}  // namespace dpflow
