#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpflow/dynamics.hpp"
#include "dpflow/order.hpp"

namespace dpflow {

struct OmegaBudget {
  double t_max = 100.0;
  double eps_conv = 1e-6;
  double recurrence_tol = 1e-3;
  double sample_dt = 0.1;
  double window = 1.0;  // trailing time spent within eps_conv before ConvergedTo
  int n_samples = 64;
  IntegratorOptions integrator;

  /// Shortest period accepted as periodic.
  double min_period() const { return 10.0 * sample_dt; }
};

enum class OmegaClass { ConvergedTo, PeriodicOrbit, Escaped, Undecided };
const char* to_string(OmegaClass c);

struct OmegaEstimate {
  OmegaClass cls = OmegaClass::Undecided;
  std::optional<Point> equilibrium;  // ConvergedTo
  double period = 0.0;               // PeriodicOrbit
  /// {e} for ConvergedTo; one period at uniform phase for PeriodicOrbit; the
  /// trailing samples otherwise.
  std::vector<Point> omega_samples;
  double budget_used = 0.0;
  double residual = 0.0;    // |f| at the last state
  double resolution = 0.0;  // spacing of omega_samples in time units
  std::string diagnostic;
};

OmegaEstimate omega_estimate(const SystemSpec& sys, const Point& x, const OmegaBudget& budget = {});

/// One-sided Hausdorff distance from phi_s(omega_samples) to the estimated
/// omega set (the equilibrium, or the orbit polyline over one period).
double omega_invariance_residual(const SystemSpec& sys, const OmegaEstimate& omega, double s,
                                 const IntegratorOptions& opts = {});

struct PropertyWitness {
  std::vector<Point> points;
  double t = 0.0;
  double margin = 0.0;
  std::string note;
};

struct PropertyReport {
  std::string property;
  std::size_t tested = 0;
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t undecided = 0;
  std::size_t skipped = 0;  // precondition not met; not part of `tested`
  bool vacuous = false;
  std::optional<PropertyWitness> witness;  // first failure, if any
  std::map<std::string, double> extras;

  bool holds() const { return fail == 0; }
  std::size_t decided() const { return pass + fail; }
};

/// Adds counts and extras of `other` into `into`; keeps the first witness.
void merge(PropertyReport& into, const PropertyReport& other);

using PointPair = std::pair<Point, Point>;

/// Pairs x <=_M y with x uniform in the region and y = x + d, d a random
/// non-negative combination of boundary rays and the interior direction of
/// C(x) with length up to max_length. About one pair in ten uses a single
/// boundary ray, so boundary-ordered pairs are included.
std::vector<PointPair> sample_ordered_pairs(const SystemSpec& sys, const Box& region,
                                            std::size_t n, std::uint64_t seed,
                                            double max_length = 1.0);

/// For ordered pairs, phi_t(x) <<_M phi_t(y) at every t > 0 of the grid.
PropertyReport monotone_flow_check(const SystemSpec& sys, const std::vector<PointPair>& pairs,
                                   const std::vector<double>& t_grid,
                                   const IntegratorOptions& opts = {}, unsigned threads = 1);

/// No two decided omega samples are ordered.
PropertyReport nonordering_check(const SystemSpec& sys, const OmegaEstimate& omega);

/// Common omega points of an ordered pair are near-equilibria.
PropertyReport intersection_check(const SystemSpec& sys, const Point& x, const Point& y,
                                  const OmegaBudget& budget = {});

/// Either both converge to the same equilibrium (branch a, tallied in
/// extras["branch_a"]) or every decided cross pair of omega samples is
/// StrictlyLess (branch b).
PropertyReport dichotomy_check(const SystemSpec& sys, const Point& x, const Point& y,
                               const OmegaBudget& budget = {});
PropertyReport dichotomy_suite(const SystemSpec& sys, const std::vector<PointPair>& pairs,
                               const OmegaBudget& budget = {}, unsigned threads = 1);

/// If x <=_M phi_T(x) then x converges.
PropertyReport order_recurrence_check(const SystemSpec& sys, const Point& x, double T,
                                      const OmegaBudget& budget = {});

/// Scans t_grid for t_0 such that phi_t(x') <<_M phi_t(y') for every sampled
/// x' in B(x, delta), y' in B(y, delta) and every grid t >= t_0.
/// extras["t0"] holds t_0 when found.
PropertyReport order_openness_probe(const SystemSpec& sys, const Point& x, const Point& y,
                                    double delta, int n, std::uint64_t seed = 0,
                                    std::vector<double> t_grid = {},
                                    const IntegratorOptions& opts = {});

}  // namespace dpflow
