#include "dpflow/cli/serialize.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

namespace dpflow::cli {

json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Point& p) { return to_json(p.coords); }

namespace {

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vec(m.row(r).transpose())));
  return rows;
}

json points_json(const std::vector<Point>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back(to_json(p));
  return a;
}

}  // namespace

json to_json(const DPReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"t", s.t},
                       {"ray", s.ray},
                       {"boundary_ray", s.boundary_ray},
                       {"image", to_json(s.image)},
                       {"margin", s.margin}});
  }
  json rays = json::array();
  for (const auto& v : r.rays) rays.push_back(to_json(v));
  json j{{"base", to_json(r.base)},
         {"verdict", to_string(r.verdict)},
         {"min_margin", r.min_margin},
         {"rays", rays},
         {"samples", samples},
         {"note", "sampled rays only: refutes DP, confirms it on the sampled rays"}};
  if (r.witness) {
    j["witness"] = {{"t", r.witness->t},
                    {"ray", to_json(r.witness->ray)},
                    {"image", to_json(r.witness->image)},
                    {"margin", r.witness->margin}};
  }
  return j;
}

json to_json(const OrderVerdict& v) {
  json j{{"relation", to_string(v.relation)},
         {"oracle", to_string(v.oracle)},
         {"equality", v.equality},
         {"min_margin", v.min_margin}};
  if (v.witness) {
    j["curve_nodes"] = points_json(v.witness->nodes);
    j["curve_min_margin"] = v.witness->min_margin;
  }
  return j;
}

json to_json(const OmegaEstimate& e) {
  json j{{"class", to_string(e.cls)},
         {"omega_samples", points_json(e.omega_samples)},
         {"sample_resolution", e.resolution},
         {"budget_used", e.budget_used},
         {"residual", e.residual},
         {"diagnostic", e.diagnostic}};
  if (e.equilibrium) j["equilibrium"] = to_json(*e.equilibrium);
  if (e.cls == OmegaClass::PeriodicOrbit) j["period"] = e.period;
  return j;
}

json to_json(const PropertyReport& r) {
  json j{{"property", r.property},
         {"tested", r.tested},
         {"pass", r.pass},
         {"fail", r.fail},
         {"undecided", r.undecided},
         {"skipped", r.skipped},
         {"vacuous", r.vacuous},
         {"holds", r.holds()}};
  json extras = json::object();
  for (const auto& [k, v] : r.extras) extras[k] = v;
  j["extras"] = extras;
  if (r.witness) {
    j["witness"] = {{"points", points_json(r.witness->points)},
                    {"t", r.witness->t},
                    {"margin", r.witness->margin},
                    {"note", r.witness->note}};
  }
  return j;
}

json to_json(const EquilibriumSet& s) {
  json a = json::array();
  for (const auto& e : s.items) {
    json eig = json::array();
    for (const auto& l : e.eigenvalues) eig.push_back({l.real(), l.imag()});
    a.push_back({{"point", to_json(e.point)},
                 {"stability", to_string(e.stability)},
                 {"eigenvalues", eig},
                 {"residual", e.residual}});
  }
  return a;
}

json to_json(const MeasureEstimate& m) {
  return {{"measure", m.measure},
          {"fraction", m.fraction},
          {"fraction_ci", {m.fraction_ci.lower, m.fraction_ci.upper}},
          {"measure_ci", {m.measure_ci.lower, m.measure_ci.upper}},
          {"upper_bound", m.upper_bound},
          {"region_measure", m.region_measure},
          {"samples", m.samples},
          {"non_convergent", m.non_convergent},
          {"undecided", m.undecided}};
}

json to_json(const CensusReport& r) {
  const auto& f = r.foliation;
  json lines = json::array();
  for (const auto& lc : r.lines) {
    lines.push_back({{"line", lc.line},
                     {"offset", to_json(lc.offset)},
                     {"length", lc.length},
                     {"clusters", lc.clusters},
                     {"non_convergent", lc.non_convergent},
                     {"undecided", lc.undecided},
                     {"label_changes", lc.label_changes},
                     {"mu", lc.mu}});
  }
  json levels = json::array();
  for (const auto& l : r.refinement) {
    levels.push_back({{"factor", l.factor},
                      {"lines", l.n_lines},
                      {"points", l.n_points},
                      {"fubini", to_json(l.fubini)},
                      {"max_clusters", l.max_clusters}});
  }
  const auto& c = r.countability;
  json j{{"system", r.system},
         {"foliation",
          {{"region", {{"lower", to_json(f.region.lower)}, {"upper", to_json(f.region.upper)}}},
           {"base", to_json(f.base)},
           {"v", to_json(f.v)},
           {"v_margin", f.v_margin},
           {"F", matrix_json(f.F.transpose())},
           {"lines_per_axis", f.n_lines},
           {"points_per_line", f.n_points},
           {"line_extent", f.line_extent()},
           {"shrinks", f.shrinks},
           {"condition", f.condition}}},
         {"equilibria", to_json(r.equilibria)},
         {"fubini", to_json(r.fubini)},
         {"refinement", levels},
         {"fit_c", r.fit_c},
         {"countability",
          {{"lines", c.lines},
           {"max_clusters", c.max_clusters},
           {"cluster_histogram", c.cluster_histogram},
           {"refinement_checked", c.refinement_checked},
           {"unstable_lines", c.unstable_lines},
           {"far_pairs", c.far_pairs},
           {"shared_omega", c.shared_omega},
           {"stable", c.stable()}}},
         {"ordered_lines",
          {{"checked", r.ordered.checked},
           {"strict", r.ordered.strict},
           {"failures", r.ordered.failures}}},
         {"max_label_changes", r.max_label_changes},
         {"basin_fractions", r.basin_fractions},
         {"lines", lines}};
  if (r.monte_carlo) {
    j["monte_carlo"] = to_json(*r.monte_carlo);
    j["z_score"] = r.z_score;
    j["estimators_agree"] = r.estimators_agree;
  }
  return j;
}

void write_census_csv(std::ostream& os, const CensusReport& r) {
  const int dim = r.foliation.base.dim();
  os << "line_index,point_index";
  for (int i = 0; i < dim; ++i) os << ",x" << i;
  os << ",class,equilibrium_index,omega_residual\n";
  char buf[64];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& lc : r.lines) {
    for (std::size_t j = 0; j < lc.samples.size(); ++j) {
      const Vec p = r.foliation.point_on(lc.offset, lc.s[j]);
      os << lc.line << ',' << j;
      for (int i = 0; i < dim; ++i) os << ',' << real(p[i]);
      os << ',' << to_string(lc.samples[j].cls) << ',' << lc.samples[j].equilibrium << ','
         << real(lc.samples[j].residual) << '\n';
    }
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dpflow::cli
