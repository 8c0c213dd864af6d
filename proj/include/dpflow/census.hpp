#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpflow/dynamics.hpp"
#include "dpflow/errors.hpp"
#include "dpflow/limits.hpp"

namespace dpflow {

class FoliationError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Lines x + s v + F y through a chart box V, with v interior to every cone
/// over V and F an orthonormal basis of the complement of span(v).
struct FoliationSpec {
  Box region;
  Point base;
  Vec v;
  double v_margin = 0.0;  // smallest margin of v over the sampled points of V
  Mat F;                  // dim x (dim - 1)
  Vec f_lower, f_upper;   // extent of V projected on F
  int n_lines = 1;        // per F axis
  int n_points = 1;       // per line
  int shrinks = 0;
  double condition = 1.0;  // of the basis [v F]

  int f_dim() const { return static_cast<int>(F.cols()); }
  std::size_t line_count() const;
  /// F coordinates of the centre of the F stratum of line `index`.
  Vec line_offset(std::size_t index) const;
  /// Volume of the F grid.
  double f_volume() const;
  /// Parameter interval [s_lo, s_hi] of the line through F offset y within V;
  /// empty (s_hi <= s_lo) when the line misses V.
  std::pair<double, double> segment(const Vec& y) const;
  Vec point_on(const Vec& y, double s) const;
  /// Largest line length over the grid.
  double line_extent() const;
};

/// Chooses v (analytic interior direction of C(x)), F, and shrinks the region
/// about x until v is interior on every sampled point. Throws FoliationError
/// after `max_shrinks` failed attempts.
FoliationSpec build_foliation(const SystemSpec& sys, const Point& x, const Box& region,
                              int n_lines, int n_points, std::uint64_t seed = 0,
                              int max_shrinks = 20);

/// Outside marks chart points that are not on the manifold; they carry no weight.
enum class SampleClass { Convergent, Boundary, Periodic, Escaped, Undecided, Outside };
const char* to_string(SampleClass c);
inline bool non_convergent(SampleClass c) {
  return c == SampleClass::Boundary || c == SampleClass::Periodic || c == SampleClass::Escaped;
}

/// A sample is Convergent when it converges to an attracting equilibrium, and
/// Boundary when it converges to a non-attracting one or when its stratum is
/// found to contain a crossing between two basins.
struct Classification {
  SampleClass cls = SampleClass::Undecided;
  int equilibrium = -1;  // index into the census equilibrium set
  double residual = 0.0;
};

struct LineCensus {
  std::size_t line = 0;
  Vec offset;  // F coordinates
  double s_lo = 0.0;
  double length = 0.0;
  std::vector<double> s;  // sample parameters along the line
  std::vector<Classification> samples;
  std::vector<std::string> omega_keys;  // per non-convergent sample; empty otherwise
  int clusters = 0;
  int non_convergent = 0;
  int undecided = 0;
  int label_changes = 0;  // among consecutive Convergent samples
  double mu = 0.0;        // weighted non-convergent length
  double mu_upper = 0.0;  // including Undecided samples
  double weight_sum = 0.0;
};

struct OrderedLineCheck {
  std::size_t checked = 0;
  std::size_t strict = 0;
  std::size_t failures = 0;  // decided, not StrictlyLess
};

struct CensusContext {
  const SystemSpec& sys;
  EquilibriumSet equilibria;
  OmegaBudget budget;
};

Classification classify_point(const CensusContext& ctx, const Point& p);

/// Classifies every sample of every line; integration failures become Undecided.
std::vector<LineCensus> run_line_census(const CensusContext& ctx, const FoliationSpec& fol,
                                        std::uint64_t seed, unsigned threads = 1,
                                        OrderedLineCheck* ordered = nullptr,
                                        double ordered_fraction = 0.05);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Wilson score interval (95%), or the rule of three when k = 0.
Interval proportion_interval(std::size_t k, std::size_t n);

struct MeasureEstimate {
  double measure = 0.0;   // non-convergent measure in V
  double fraction = 0.0;  // measure / measure(V)
  Interval fraction_ci;
  Interval measure_ci;
  double upper_bound = 0.0;  // measure counting Undecided samples as non-convergent
  double region_measure = 0.0;
  std::size_t samples = 0;
  std::size_t non_convergent = 0;
  std::size_t undecided = 0;
};

/// Product estimate mean_y(mu_y) * vol_F.
MeasureEstimate measure_estimate(const std::vector<LineCensus>& lines, const FoliationSpec& fol);

/// Uniform samples of V, each flagged when it is non-convergent or when its
/// class differs from that of a neighbour at +-(line spacing / 2) along v.
MeasureEstimate monte_carlo_estimate(const CensusContext& ctx, const FoliationSpec& fol,
                                     std::size_t n_samples, std::uint64_t seed,
                                     unsigned threads = 1);

/// Pooled two-proportion z statistic of the two non-convergent fractions.
double pooled_z(const MeasureEstimate& a, const MeasureEstimate& b);

struct CountabilityReport {
  std::size_t lines = 0;
  int max_clusters = 0;
  std::vector<std::size_t> cluster_histogram;  // index = cluster count
  std::size_t unstable_lines = 0;  // coarse lines whose refined clusters differ in count
  bool refinement_checked = false;
  std::size_t far_pairs = 0;             // non-convergent pairs more than 10 steps apart
  std::size_t shared_omega = 0;          // of those, with the same omega key
  bool stable() const { return unstable_lines == 0 && shared_omega == 0; }
};

/// Finite cluster counts per line; with `fine`, compares each coarse line to
/// the refined lines of its F stratum.
CountabilityReport countability_probe(const std::vector<LineCensus>& coarse,
                                      const FoliationSpec& coarse_fol,
                                      const std::vector<LineCensus>* fine = nullptr,
                                      const FoliationSpec* fine_fol = nullptr);

struct CensusOptions {
  int n_lines = 101;
  int n_points = 201;
  int refinement_levels = 3;  // resolutions 1x, 2x, 4x, ...
  bool monte_carlo = true;
  std::size_t mc_samples = 0;  // 0 = matched to the 1x census size
  double ordered_fraction = 0.05;
  int equilibrium_seeds = 64;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  OmegaBudget budget;
};

struct RefinementLevel {
  int factor = 1;
  int n_lines = 0;
  int n_points = 0;
  MeasureEstimate fubini;
  int max_clusters = 0;
};

struct CensusReport {
  std::string system;
  FoliationSpec foliation;
  EquilibriumSet equilibria;
  std::vector<LineCensus> lines;  // 1x resolution
  MeasureEstimate fubini;
  std::optional<MeasureEstimate> monte_carlo;
  double z_score = 0.0;
  bool estimators_agree = true;  // |z| <= 3
  std::vector<RefinementLevel> refinement;
  double fit_c = 0.0;  // fraction ~ c / n_points
  CountabilityReport countability;
  OrderedLineCheck ordered;
  int max_label_changes = 0;
  std::vector<double> basin_fractions;  // per equilibrium, over 1x samples
};

CensusReport run_census(const SystemSpec& sys, const Point& x, const Box& region,
                        const CensusOptions& opts);

}  // namespace dpflow
