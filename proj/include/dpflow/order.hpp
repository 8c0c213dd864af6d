#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpflow/cones.hpp"
#include "dpflow/dynamics.hpp"
#include "dpflow/geometry.hpp"

namespace dpflow {

enum class Relation { StrictlyLess, Less, Incomparable, Undecided };
enum class OrderOracle { AnalyticConstant, Loewner, CurveSearch };
const char* to_string(Relation r);
const char* to_string(OrderOracle o);

inline bool is_ordered(Relation r) { return r == Relation::StrictlyLess || r == Relation::Less; }

/// Piecewise-linear chart curve; tangents[k] is the unit direction of the
/// segment nodes[k] -> nodes[k+1].
struct ConalCurve {
  std::vector<Point> nodes;
  std::vector<TangentVector> tangents;
  double min_margin = 0.0;
};

struct OrderBudget {
  double target_radius = 1e-3;  // epsilon
  double step = 0.0;            // h; 0 means epsilon / 2
  int max_steps = 100'000;
};

struct OrderVerdict {
  Relation relation = Relation::Undecided;
  OrderOracle oracle = OrderOracle::CurveSearch;
  bool equality = false;  // x == y, answered Less by convention
  double min_margin = 0.0;
  std::optional<ConalCurve> witness;
};

/// Decides x <=_M y: an exact test of y - x for constant cones on Euclidean
/// charts, the Loewner test for the PSD field on SPD, otherwise a conal curve
/// search (failure is Undecided, never Incomparable).
OrderVerdict compare(const Manifold& m, const ConeField& field, const Point& x, const Point& y,
                     const OrderBudget& budget = {});
OrderVerdict compare(const SystemSpec& sys, const Point& x, const Point& y,
                     const OrderBudget& budget = {});

/// compare(x, x + delta) with the offset given directly, so that tiny
/// separations of nearby points are judged without cancellation.
OrderVerdict compare_offset(const Manifold& m, const ConeField& field, const Point& x,
                            const Vec& delta, const OrderBudget& budget = {});
OrderVerdict compare_offset(const SystemSpec& sys, const Point& x, const Vec& delta,
                            const OrderBudget& budget = {});

/// Greedy steering: at p step by h along the cone member closest to y - p.
/// A dead end rolls back the greedy part and detours along the cone axis
/// (at most 32 times, staying within 4 d(x, y) of y) before retrying.
/// Success requires d(p, y) < epsilon with every tangent margin >= -strict_tol.
std::optional<ConalCurve> conal_curve_search(const Manifold& m, const ConeField& field,
                                             const Point& x, const Point& y,
                                             const OrderBudget& budget = {});

struct ViolationPair {
  Point x;
  Point y;
};

/// Sampled pairs ordered both ways at chart distance above 10 epsilon.
std::vector<ViolationPair> antisymmetry_diagnostic(const Manifold& m, const ConeField& field,
                                                   const Box& region, int n_samples,
                                                   std::uint64_t seed = 0,
                                                   const OrderBudget& budget = {});

struct PairSequence {
  std::vector<Point> xs;
  std::vector<Point> ys;
  Vec x_limit;  // chart coordinates; may lie outside the manifold
  Vec y_limit;
};

struct QuasiClosednessReport {
  std::size_t sequences = 0;
  std::size_t holds = 0;
  std::size_t violations = 0;
  std::size_t undecided = 0;
  std::size_t domain_exits = 0;      // counted within undecided
  std::size_t invalid_sequences = 0; // some item not StrictlyLess; skipped
};

QuasiClosednessReport quasi_closedness_probe(const Manifold& m, const ConeField& field,
                                             const std::vector<PairSequence>& sequences,
                                             const OrderBudget& budget = {});

}  // namespace dpflow
