#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpflow/cones.hpp"
#include "dpflow/errors.hpp"
#include "dpflow/geometry.hpp"
#include "dpflow/integrator.hpp"

namespace dpflow {

/// Chart velocity f(x); writes dim() components into `out` without allocating.
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;
using JacobianFn = std::function<Mat(const Vec& x)>;

struct DeclaredProperties {
  bool dp = false;
  bool sdp = false;
  bool h1 = false;  // globally orderable
  bool h2 = false;  // quasi-closed order
  bool h3 = false;  // Gamma-invariant cone field and metric
};

/// A system x' = f(x) on a manifold with a cone field.
struct SystemSpec {
  std::string name;
  Manifold manifold;
  ConeField cone_field;
  VectorField f;
  JacobianFn df;  // optional; central differences otherwise
  DeclaredProperties declared;
  Box region;

  int dim() const { return manifold.dim(); }
  Vec eval(const Vec& x) const;
  Mat jacobian(const Vec& x) const;
};

/// Central-difference Jacobian with h = 1e-6 (1 + |x|).
Mat finite_difference_jacobian(const VectorField& f, const Vec& x);

enum class FlowStatus { Completed, Escaped };
const char* to_string(FlowStatus s);

struct Trajectory {
  std::vector<double> times;
  std::vector<Point> points;
  StepDiagnostics diagnostics;
  FlowStatus status = FlowStatus::Completed;

  const Point& endpoint() const { return points.back(); }
};

/// Step-size underflow; carries the trajectory up to the failure.
class StiffnessError : public NumericError {
 public:
  explicit StiffnessError(Trajectory partial)
      : NumericError("step size underflow: stiff or singular system"), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Every accepted step of phi_t(x0) for t in [0, T] (T may be negative).
Trajectory flow(const SystemSpec& sys, const Point& x0, double T, const IntegratorOptions& opts = {});

struct FlowEnd {
  Point point;
  double t = 0.0;  // time reached (differs from T on escape)
  FlowStatus status = FlowStatus::Completed;
};

/// phi_T(x0) without recording the path.
FlowEnd flow_to(const SystemSpec& sys, const Point& x0, double T, const IntegratorOptions& opts = {});

struct FlowLinearization {
  Point base;
  double t = 0.0;
  Mat matrix;  // d phi_t(base) in chart coordinates
};

/// Integrates x' = f(x), J' = Df(x) J, J(0) = I; returns phi_T(x0) and J(T).
std::pair<Point, FlowLinearization> variational_flow(const SystemSpec& sys, const Point& x0,
                                                     double T, const IntegratorOptions& opts = {});

/// Flows the pair (x, y) as (x, delta = y - x) with delta' = f(x + delta) - f(x),
/// so the separation keeps its relative accuracy after both points converge.
struct PairFlow {
  Point x;
  Vec delta;
  FlowStatus status = FlowStatus::Completed;
};
PairFlow flow_pair(const SystemSpec& sys, const Point& x, const Point& y, double T,
                   const IntegratorOptions& opts = {});
/// Same, returning the pair at each time of an increasing grid (entries >= 0).
std::vector<PairFlow> flow_pair_grid(const SystemSpec& sys, const Point& x, const Point& y,
                                     const std::vector<double>& t_grid,
                                     const IntegratorOptions& opts = {});

enum class DPVerdict { SDPConsistent, DPConsistent, Violated };
const char* to_string(DPVerdict v);

struct DPSample {
  double t = 0.0;
  int ray = 0;
  bool boundary_ray = true;  // false for interior probes
  Vec image;
  double margin = 0.0;
};

struct DPWitness {
  Point base;
  double t = 0.0;
  Vec ray;
  Vec image;
  double margin = 0.0;
};

/// Sampled cone-invariance check of d phi_t. One-sided: it can refute DP and
/// only confirms it on the sampled rays.
struct DPReport {
  Point base;
  std::vector<Vec> rays;
  std::vector<DPSample> samples;
  double min_margin = 0.0;
  DPVerdict verdict = DPVerdict::DPConsistent;
  std::optional<DPWitness> witness;  // worst sample when Violated
};

DPReport check_dp(const SystemSpec& sys, const Point& x0, std::vector<double> t_grid, int n_rays,
                  std::uint64_t seed = 0, const IntegratorOptions& opts = {});

/// |d phi_{t+s}(x0) - d phi_s(phi_t x0) d phi_t(x0)|_F.
double cocycle_check(const SystemSpec& sys, const Point& x0, double t, double s,
                     const IntegratorOptions& opts = {});

enum class Stability { Stable, Unstable, Saddle, Center, NonHyperbolic };
const char* to_string(Stability s);

struct Equilibrium {
  Point point;
  std::vector<std::complex<double>> eigenvalues;
  Stability stability = Stability::NonHyperbolic;
  double residual = 0.0;  // |f(e)|
};

struct EquilibriumSet {
  std::vector<Equilibrium> items;
  double merge_radius = 0.0;

  /// Index of the equilibrium within `radius` of p, or -1.
  int find(const Vec& p, double radius) const;
};

/// Damped Newton on f(x) = 0 from `start`; the root when |f| < tol.
std::optional<Point> refine_equilibrium(const SystemSpec& sys, const Point& start,
                                        double tol = 1e-10, int max_iterations = 60);

Equilibrium describe_equilibrium(const SystemSpec& sys, const Point& e);

/// Newton from the box center and n_seeds random starts; roots are merged
/// within merge_radius and sorted lexicographically.
EquilibriumSet find_equilibria(const SystemSpec& sys, const Box& region, int n_seeds,
                               std::uint64_t seed = 0, double merge_radius = 1e-6);

}  // namespace dpflow
