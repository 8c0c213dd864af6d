#include "dpflow/census.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "dpflow/order.hpp"
#include "dpflow/parallel.hpp"
#include "dpflow/rng.hpp"

namespace dpflow {

const char* to_string(SampleClass c) {
  switch (c) {
    case SampleClass::Convergent: return "Convergent";
    case SampleClass::Boundary: return "Boundary";
    case SampleClass::Periodic: return "Periodic";
    case SampleClass::Escaped: return "Escaped";
    case SampleClass::Undecided: return "Undecided";
    case SampleClass::Outside: return "Outside";
  }
  return "?";
}

std::size_t FoliationSpec::line_count() const {
  std::size_t count = 1;
  for (int i = 0; i < f_dim(); ++i) count *= static_cast<std::size_t>(n_lines);
  return count;
}

Vec FoliationSpec::line_offset(std::size_t index) const {
  Vec y(f_dim());
  for (int i = 0; i < f_dim(); ++i) {
    const auto m = static_cast<double>(index % static_cast<std::size_t>(n_lines));
    index /= static_cast<std::size_t>(n_lines);
    y[i] = f_lower[i] + (m + 0.5) * (f_upper[i] - f_lower[i]) / n_lines;
  }
  return y;
}

double FoliationSpec::f_volume() const {
  double vol = 1.0;
  for (int i = 0; i < f_dim(); ++i) vol *= f_upper[i] - f_lower[i];
  return vol;
}

Vec FoliationSpec::point_on(const Vec& y, double s) const {
  return base.coords + s * v + F * y;
}

std::pair<double, double> FoliationSpec::segment(const Vec& y) const {
  const Vec c = base.coords + F * y;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.size(); ++i) {
    if (std::abs(v[i]) < 1e-15) {
      if (c[i] < region.lower[i] || c[i] > region.upper[i]) return {0.0, 0.0};
      continue;
    }
    double a = (region.lower[i] - c[i]) / v[i];
    double b = (region.upper[i] - c[i]) / v[i];
    if (a > b) std::swap(a, b);
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  }
  if (!(hi > lo)) return {0.0, 0.0};
  return {lo, hi};
}

double FoliationSpec::line_extent() const {
  double best = 0.0;
  for (std::size_t k = 0; k < line_count(); ++k) {
    const auto [lo, hi] = segment(line_offset(k));
    best = std::max(best, hi - lo);
  }
  return best;
}

namespace {

std::vector<Vec> box_corners(const Box& box) {
  const int n = box.dim();
  std::vector<Vec> out;
  if (n > 16) return out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vec c(n);
    for (int i = 0; i < n; ++i) c[i] = (mask >> i) & 1u ? box.upper[i] : box.lower[i];
    out.push_back(c);
  }
  return out;
}

}  // namespace

FoliationSpec build_foliation(const SystemSpec& sys, const Point& x, const Box& region,
                              int n_lines, int n_points, std::uint64_t seed, int max_shrinks) {
  const int n = sys.dim();
  if (region.dim() != n) throw ArgumentError("census region dimension does not match the system");
  if (n_lines < 1 || n_points < 1) throw ArgumentError("census resolution must be positive");
  if (!region.contains(x.coords)) throw ArgumentError("foliation base point lies outside the region");
  sys.manifold.require_point(x);
  const ConeSpec cone = sys.cone_field.cone_at(x);
  if (!cone.is_solid()) throw FoliationError("cone at the base point is not solid");

  FoliationSpec fol;
  fol.base = x;
  fol.n_lines = n_lines;
  fol.n_points = n_points;
  fol.v = cone.interior_direction().normalized();
  const Eigen::HouseholderQR<Mat> qr(Mat(fol.v));
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  fol.F = q.rightCols(n - 1);
  Mat basis(n, n);
  basis.col(0) = fol.v;
  basis.rightCols(n - 1) = fol.F;
  const Eigen::JacobiSVD<Mat> svd(basis);
  fol.condition = svd.singularValues()(0) / svd.singularValues()(n - 1);
  if (!(fol.condition < 1e6)) throw FoliationError("line basis is ill-conditioned");

  Box box = region;
  for (;; ++fol.shrinks) {
    if (fol.shrinks > max_shrinks) {
      throw FoliationError("v is not interior over any shrunken region");
    }
    std::vector<Vec> probes = box_corners(box);
    probes.push_back(box.center());
    Rng rng(derive_seed(seed, {0xf0, static_cast<std::uint64_t>(fol.shrinks)}));
    for (int k = 0; k < 64; ++k) {
      Vec p(n);
      for (int i = 0; i < n; ++i) p[i] = uniform(rng, box.lower[i], box.upper[i]);
      probes.push_back(p);
    }
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& p : probes) {
      if (!sys.manifold.in_domain(p)) continue;
      worst = std::min(worst, sys.cone_field.margin(Point{p}, fol.v));
    }
    if (worst > kStrictTol) {
      fol.v_margin = worst;
      break;
    }
    box = box.shrink_about(x.coords, 0.8);
  }
  fol.region = box;
  fol.f_lower = Vec::Constant(n - 1, std::numeric_limits<double>::infinity());
  fol.f_upper = Vec::Constant(n - 1, -std::numeric_limits<double>::infinity());
  for (const auto& c : box_corners(box)) {
    const Vec y = fol.F.transpose() * (c - x.coords);
    fol.f_lower = fol.f_lower.cwiseMin(y);
    fol.f_upper = fol.f_upper.cwiseMax(y);
  }
  return fol;
}

Classification classify_point(const CensusContext& ctx, const Point& p) {
  Classification c;
  if (!ctx.sys.manifold.in_domain(p.coords)) {
    c.cls = SampleClass::Outside;
    return c;
  }
  const OmegaEstimate est = omega_estimate(ctx.sys, p, ctx.budget);
  c.residual = est.residual;
  switch (est.cls) {
    case OmegaClass::ConvergedTo: {
      const double radius = std::max(ctx.equilibria.merge_radius, 10.0 * ctx.budget.eps_conv);
      c.equilibrium = ctx.equilibria.find(est.equilibrium->coords, radius);
      const Stability st = c.equilibrium >= 0
                               ? ctx.equilibria.items[c.equilibrium].stability
                               : describe_equilibrium(ctx.sys, *est.equilibrium).stability;
      c.cls = st == Stability::Stable ? SampleClass::Convergent : SampleClass::Boundary;
      break;
    }
    case OmegaClass::PeriodicOrbit: c.cls = SampleClass::Periodic; break;
    case OmegaClass::Escaped: c.cls = SampleClass::Escaped; break;
    case OmegaClass::Undecided: c.cls = SampleClass::Undecided; break;
  }
  return c;
}

namespace {

// Distinct per class and per equilibrium.
int label(const Classification& c) {
  return c.cls == SampleClass::Convergent ? c.equilibrium : -2 - static_cast<int>(c.cls);
}

double weight_at(const SystemSpec& sys, const Vec& p) {
  if (sys.manifold.kind() != Manifold::Kind::SPD) return 1.0;
  return sys.manifold.volume_density(Point{p});
}

std::string crossing_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return "x" + std::to_string(a) + "|" + std::to_string(b);
}

LineCensus census_line(const CensusContext& ctx, const FoliationSpec& fol, std::size_t index,
                       std::uint64_t seed, OrderedLineCheck* ordered, double ordered_fraction) {
  LineCensus lc;
  lc.line = index;
  lc.offset = fol.line_offset(index);
  const auto [lo, hi] = fol.segment(lc.offset);
  lc.s_lo = lo;
  lc.length = hi - lo;
  if (!(lc.length > 0.0)) {
    lc.length = 0.0;
    return lc;
  }
  const int P = fol.n_points;
  const double cell = lc.length / P;
  lc.s.resize(P);
  lc.samples.resize(P);
  lc.omega_keys.assign(P, "");
  std::vector<double> weights(P, 0.0);
  auto at = [&](double s) { return Point{fol.point_on(lc.offset, s)}; };
  for (int j = 0; j < P; ++j) {
    Rng rng(derive_seed(seed, {index, static_cast<std::uint64_t>(j)}));
    lc.s[j] = lo + cell * (j + uniform01(rng));
    const Point p = at(lc.s[j]);
    lc.samples[j] = classify_point(ctx, p);
    if (lc.samples[j].cls != SampleClass::Outside) weights[j] = weight_at(ctx.sys, p.coords);
  }

  int previous = std::numeric_limits<int>::min();
  for (const auto& c : lc.samples) {
    if (c.cls != SampleClass::Convergent) continue;
    if (previous != std::numeric_limits<int>::min() && c.equilibrium != previous) ++lc.label_changes;
    previous = c.equilibrium;
  }

  // Attribute each basin crossing to the stratum that contains it.
  const std::vector<Classification> original = lc.samples;
  auto mark = [&](int j, const std::string& key) {
    if (lc.samples[j].cls != SampleClass::Convergent) return;
    lc.samples[j].cls = SampleClass::Boundary;
    lc.omega_keys[j] = key;
  };
  for (int j = 0; j + 1 < P; ++j) {
    const auto& a = original[j];
    const auto& b = original[j + 1];
    if (a.cls != SampleClass::Convergent || b.cls != SampleClass::Convergent) continue;
    if (a.equilibrium == b.equilibrium) continue;
    const std::string key = crossing_key(a.equilibrium, b.equilibrium);
    const Classification mid = classify_point(ctx, at(lo + cell * (j + 1)));
    if (label(mid) == label(a)) {
      mark(j + 1, key);
    } else if (label(mid) == label(b)) {
      mark(j, key);
    } else {
      // Crossing sits on the shared endpoint; strata are half-open [lo, hi).
      mark(j + 1, key);
    }
  }
  for (const auto& [j, s] : {std::pair{0, lo}, std::pair{P - 1, hi}}) {
    if (original[j].cls != SampleClass::Convergent) continue;
    const Classification end = classify_point(ctx, at(s));
    if (end.cls == SampleClass::Convergent && end.equilibrium != original[j].equilibrium) {
      mark(j, crossing_key(end.equilibrium, original[j].equilibrium));
    }
  }

  bool in_run = false;
  for (int j = 0; j < P; ++j) {
    const auto& c = lc.samples[j];
    lc.weight_sum += weights[j];
    if (non_convergent(c.cls)) {
      ++lc.non_convergent;
      lc.mu += weights[j] * cell;
      lc.mu_upper += weights[j] * cell;
      if (!in_run) ++lc.clusters;
      in_run = true;
      if (lc.omega_keys[j].empty()) {
        lc.omega_keys[j] = c.cls == SampleClass::Boundary && c.equilibrium >= 0
                               ? "e" + std::to_string(c.equilibrium)
                               : "u" + std::to_string(index) + "_" + std::to_string(j);
      }
    } else {
      in_run = false;
      if (c.cls == SampleClass::Undecided) {
        ++lc.undecided;
        lc.mu_upper += weights[j] * cell;
      }
    }
  }

  if (ordered && P > 1 && ordered_fraction > 0.0) {
    Rng rng(derive_seed(seed, {index, 0x0dULL << 32}));
    for (int j = 0; j + 1 < P; ++j) {
      if (uniform01(rng) >= ordered_fraction) continue;
      const Point p = at(lc.s[j]);
      const Point q = at(lc.s[j + 1]);
      if (!ctx.sys.manifold.in_domain(p.coords) || !ctx.sys.manifold.in_domain(q.coords)) continue;
      ++ordered->checked;
      const Relation r = compare(ctx.sys, p, q).relation;
      if (r == Relation::StrictlyLess) ++ordered->strict;
      else if (r != Relation::Undecided) ++ordered->failures;
    }
  }
  return lc;
}

}  // namespace

std::vector<LineCensus> run_line_census(const CensusContext& ctx, const FoliationSpec& fol,
                                        std::uint64_t seed, unsigned threads,
                                        OrderedLineCheck* ordered, double ordered_fraction) {
  const std::size_t count = fol.line_count();
  std::vector<LineCensus> lines(count);
  std::vector<OrderedLineCheck> checks(count);
  parallel_for(count, threads, [&](std::size_t k) {
    lines[k] = census_line(ctx, fol, k, seed, ordered ? &checks[k] : nullptr, ordered_fraction);
  });
  if (ordered) {
    for (const auto& c : checks) {
      ordered->checked += c.checked;
      ordered->strict += c.strict;
      ordered->failures += c.failures;
    }
  }
  return lines;
}

Interval proportion_interval(std::size_t k, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  if (k == 0) return {0.0, std::min(1.0, 3.0 / nn)};
  constexpr double z = 1.959963984540054;
  const double p = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

void fill_intervals(MeasureEstimate& m) {
  m.fraction = m.region_measure > 0.0 ? m.measure / m.region_measure : 0.0;
  m.fraction_ci = proportion_interval(m.non_convergent, m.samples);
  m.measure_ci = {m.fraction_ci.lower * m.region_measure, m.fraction_ci.upper * m.region_measure};
}

}  // namespace

MeasureEstimate measure_estimate(const std::vector<LineCensus>& lines, const FoliationSpec& fol) {
  if (lines.empty()) throw ArgumentError("measure_estimate needs at least one line");
  MeasureEstimate m;
  const double dy = fol.f_volume() / static_cast<double>(fol.line_count());
  for (const auto& lc : lines) {
    m.measure += lc.mu * dy;
    m.upper_bound += lc.mu_upper * dy;
    m.region_measure += lc.weight_sum * (lc.length / std::max(1, fol.n_points)) * dy;
    m.non_convergent += static_cast<std::size_t>(lc.non_convergent);
    m.undecided += static_cast<std::size_t>(lc.undecided);
    for (const auto& c : lc.samples) {
      if (c.cls != SampleClass::Outside && c.cls != SampleClass::Undecided) ++m.samples;
    }
  }
  fill_intervals(m);
  return m;
}

MeasureEstimate monte_carlo_estimate(const CensusContext& ctx, const FoliationSpec& fol,
                                     std::size_t n_samples, std::uint64_t seed, unsigned threads) {
  struct Draw {
    double weight = 0.0;
    int state = 0;  // 0 convergent, 1 flagged, 2 undecided, 3 outside
  };
  const int n = fol.region.dim();
  std::vector<Draw> draws(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {0x3c, i}));
    Vec q(n);
    for (int k = 0; k < n; ++k) q[k] = uniform(rng, fol.region.lower[k], fol.region.upper[k]);
    Draw& d = draws[i];
    if (!ctx.sys.manifold.in_domain(q)) {
      d.state = 3;
      return;
    }
    d.weight = weight_at(ctx.sys, q);
    const Classification c = classify_point(ctx, Point{q});
    if (non_convergent(c.cls)) {
      d.state = 1;
      return;
    }
    if (c.cls == SampleClass::Undecided) {
      d.state = 2;
      return;
    }
    const Vec y = fol.F.transpose() * (q - fol.base.coords);
    const auto [lo, hi] = fol.segment(y);
    const double half = 0.5 * (hi - lo) / fol.n_points;
    bool undecided = false;
    for (double sign : {-1.0, 1.0}) {
      const Vec nb = q + sign * half * fol.v;
      if (!ctx.sys.manifold.in_domain(nb)) continue;
      const Classification cn = classify_point(ctx, Point{nb});
      if (cn.cls == SampleClass::Undecided) {
        undecided = true;
      } else if (label(cn) != label(c)) {
        d.state = 1;
        return;
      }
    }
    d.state = undecided ? 2 : 0;
  });
  MeasureEstimate m;
  double total = 0.0, flagged = 0.0, pending = 0.0;
  std::size_t drawn = 0;
  for (const auto& d : draws) {
    if (d.state == 3) continue;
    ++drawn;
    total += d.weight;
    if (d.state == 1) {
      flagged += d.weight;
      ++m.non_convergent;
    } else if (d.state == 2) {
      pending += d.weight;
      ++m.undecided;
    }
  }
  m.samples = drawn - m.undecided;
  if (drawn > 0) {
    // Box volume times the mean density over the drawn points.
    m.region_measure = fol.region.volume() * total / static_cast<double>(n_samples);
    const double decided_weight = total - pending;
    m.measure = decided_weight > 0.0 ? m.region_measure * flagged / decided_weight : 0.0;
    m.upper_bound = m.region_measure * (flagged + pending) / total;
  }
  fill_intervals(m);
  return m;
}

double pooled_z(const MeasureEstimate& a, const MeasureEstimate& b) {
  if (a.samples == 0 || b.samples == 0) return 0.0;
  const double na = static_cast<double>(a.samples), nb = static_cast<double>(b.samples);
  const double pooled = (a.fraction * na + b.fraction * nb) / (na + nb);
  const double var = pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb);
  const double diff = a.fraction - b.fraction;
  if (var <= 0.0) return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return diff / std::sqrt(var);
}

CountabilityReport countability_probe(const std::vector<LineCensus>& coarse,
                                      const FoliationSpec& coarse_fol,
                                      const std::vector<LineCensus>* fine,
                                      const FoliationSpec* fine_fol) {
  CountabilityReport r;
  r.lines = coarse.size();
  for (const auto& lc : coarse) {
    r.max_clusters = std::max(r.max_clusters, lc.clusters);
    if (r.cluster_histogram.size() <= static_cast<std::size_t>(lc.clusters)) {
      r.cluster_histogram.resize(lc.clusters + 1, 0);
    }
    ++r.cluster_histogram[lc.clusters];
    // Non-convergent samples far apart on one line must have distinct omega sets.
    if (lc.length <= 0.0) continue;
    const double step = lc.length / coarse_fol.n_points;
    std::vector<int> idx;
    for (std::size_t j = 0; j < lc.samples.size(); ++j) {
      if (non_convergent(lc.samples[j].cls)) idx.push_back(static_cast<int>(j));
    }
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        if (lc.s[idx[b]] - lc.s[idx[a]] <= 10.0 * step) continue;
        ++r.far_pairs;
        if (lc.omega_keys[idx[a]] == lc.omega_keys[idx[b]]) ++r.shared_omega;
      }
    }
  }
  if (fine && fine_fol && coarse_fol.f_dim() == fine_fol->f_dim()) {
    r.refinement_checked = true;
    // Fine lines whose F offset falls in each coarse stratum.
    std::vector<int> fine_max(coarse.size(), -1);
    for (const auto& lf : *fine) {
      std::size_t index = 0, stride = 1;
      bool inside = true;
      for (int i = 0; i < coarse_fol.f_dim(); ++i) {
        const double w = (coarse_fol.f_upper[i] - coarse_fol.f_lower[i]) / coarse_fol.n_lines;
        const double m = std::floor((lf.offset[i] - coarse_fol.f_lower[i]) / w);
        if (m < 0 || m >= coarse_fol.n_lines) inside = false;
        index += static_cast<std::size_t>(std::max(0.0, m)) * stride;
        stride *= static_cast<std::size_t>(coarse_fol.n_lines);
      }
      if (!inside || index >= coarse.size()) continue;
      fine_max[index] = std::max(fine_max[index], lf.clusters);
    }
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      if (fine_max[k] >= 0 && fine_max[k] != coarse[k].clusters) ++r.unstable_lines;
    }
  }
  return r;
}

CensusReport run_census(const SystemSpec& sys, const Point& x, const Box& region,
                        const CensusOptions& opts) {
  if (opts.refinement_levels < 1) throw ArgumentError("census needs at least one resolution level");
  CensusReport report;
  report.system = sys.name;
  report.equilibria = find_equilibria(sys, region, opts.equilibrium_seeds, opts.seed);
  const CensusContext ctx{sys, report.equilibria, opts.budget};

  std::vector<std::vector<LineCensus>> levels;
  std::vector<FoliationSpec> foliations;
  for (int level = 0; level < opts.refinement_levels; ++level) {
    const int factor = 1 << level;
    FoliationSpec fol =
        build_foliation(sys, x, region, opts.n_lines * factor, opts.n_points * factor, opts.seed);
    auto lines = run_line_census(ctx, fol, derive_seed(opts.seed, {static_cast<std::uint64_t>(level)}),
                                 opts.threads, level == 0 ? &report.ordered : nullptr,
                                 opts.ordered_fraction);
    RefinementLevel rl;
    rl.factor = factor;
    rl.n_lines = fol.n_lines;
    rl.n_points = fol.n_points;
    rl.fubini = measure_estimate(lines, fol);
    for (const auto& lc : lines) rl.max_clusters = std::max(rl.max_clusters, lc.clusters);
    report.refinement.push_back(rl);
    levels.push_back(std::move(lines));
    foliations.push_back(std::move(fol));
  }
  report.foliation = foliations.front();
  report.lines = levels.front();
  report.fubini = report.refinement.front().fubini;

  double num = 0.0, den = 0.0;
  for (const auto& rl : report.refinement) {
    const double h = 1.0 / rl.n_points;
    num += rl.fubini.fraction * h;
    den += h * h;
  }
  report.fit_c = num / den;

  report.countability = countability_probe(levels[0], foliations[0],
                                           levels.size() > 1 ? &levels[1] : nullptr,
                                           foliations.size() > 1 ? &foliations[1] : nullptr);

  if (opts.monte_carlo) {
    std::size_t n = opts.mc_samples;
    if (n == 0) {
      for (const auto& lc : report.lines) n += lc.samples.size();
    }
    report.monte_carlo = monte_carlo_estimate(ctx, report.foliation, n,
                                              derive_seed(opts.seed, {0x6d63}), opts.threads);
    report.z_score = pooled_z(report.fubini, *report.monte_carlo);
    report.estimators_agree = std::abs(report.z_score) <= 3.0;
  }

  report.basin_fractions.assign(report.equilibria.items.size(), 0.0);
  std::size_t total = 0;
  for (const auto& lc : report.lines) {
    report.max_label_changes = std::max(report.max_label_changes, lc.label_changes);
    for (const auto& c : lc.samples) {
      if (c.cls == SampleClass::Outside) continue;
      ++total;
      if (c.equilibrium >= 0 && c.cls == SampleClass::Convergent) {
        report.basin_fractions[c.equilibrium] += 1.0;
      }
    }
  }
  if (total > 0) {
    for (auto& f : report.basin_fractions) f /= static_cast<double>(total);
  }
  return report;
}

}  // namespace dpflow
