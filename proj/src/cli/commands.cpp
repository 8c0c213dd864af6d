#include "dpflow/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "dpflow/cli/serialize.hpp"
#include "dpflow/rng.hpp"

namespace dpflow::cli {

namespace fs = std::filesystem;

std::vector<std::string> subcommands() {
  return {"verify-dp", "order", "omega", "suite", "census", "report"};
}

namespace {

struct Outcome {
  json body;
  int code = kPass;
};

json envelope(const std::string& command, const RunConfig& cfg) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"system", cfg.system->name},
          {"seed", cfg.seed},
          {"generated_at", utc_timestamp()},
          {"config", cfg.source}};
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + cfg.out + "'");
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

Point require_query(const std::optional<Vec>& v, const char* name, const RunConfig& cfg) {
  if (!v) throw ConfigError(std::string("missing query point ") + name);
  if (v->size() != cfg.system->dim()) {
    throw ConfigError(std::string("query point ") + name + " has the wrong dimension");
  }
  return Point{*v};
}

std::vector<Point> region_points(const RunConfig& cfg, int count, std::uint64_t salt) {
  std::vector<Point> out;
  if (cfg.system->manifold.in_domain(cfg.region.center())) out.push_back(Point{cfg.region.center()});
  Rng rng(derive_seed(cfg.seed, {salt}));
  for (int guard = 0; static_cast<int>(out.size()) < count && guard < 1000 * count; ++guard) {
    Vec p(cfg.region.dim());
    for (int i = 0; i < p.size(); ++i) p[i] = uniform(rng, cfg.region.lower[i], cfg.region.upper[i]);
    if (cfg.system->manifold.in_domain(p)) out.push_back(Point{p});
  }
  return out;
}

Outcome verify_dp(const RunConfig& cfg) {
  const SystemSpec& sys = *cfg.system;
  std::vector<Point> points;
  for (const auto& p : cfg.dp.points) {
    if (p.size() != sys.dim()) throw ConfigError("dp.points entry has the wrong dimension");
    points.push_back(Point{p});
  }
  if (points.empty()) points = region_points(cfg, cfg.dp.n_points, 0xd9);
  Outcome o;
  json reports = json::array();
  DPVerdict overall = DPVerdict::SDPConsistent;
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const DPReport r = check_dp(sys, points[k], cfg.dp.t_grid, cfg.dp.n_rays,
                                derive_seed(cfg.seed, {0xd9, k}), cfg.integrator);
    reports.push_back(to_json(r));
    min_margin = std::min(min_margin, r.min_margin);
    if (r.verdict == DPVerdict::Violated) overall = DPVerdict::Violated;
    else if (r.verdict == DPVerdict::DPConsistent && overall == DPVerdict::SDPConsistent) {
      overall = DPVerdict::DPConsistent;
    }
  }
  o.body = {{"verdict", to_string(overall)}, {"min_margin", min_margin}, {"reports", reports},
            {"declared", {{"dp", sys.declared.dp}, {"sdp", sys.declared.sdp}}}};
  o.code = overall == DPVerdict::Violated ? kPropertyFailure : kPass;
  return o;
}

Outcome order(const RunConfig& cfg) {
  const Point x = require_query(cfg.x, "x", cfg);
  const Point y = require_query(cfg.y, "y", cfg);
  Outcome o;
  o.body = to_json(compare(*cfg.system, x, y, cfg.order));
  o.body["x"] = to_json(x);
  o.body["y"] = to_json(y);
  return o;
}

Outcome omega(const RunConfig& cfg) {
  const Point x = require_query(cfg.x, "x", cfg);
  Outcome o;
  o.body = to_json(omega_estimate(*cfg.system, x, cfg.omega));
  o.body["x"] = to_json(x);
  return o;
}

Outcome suite(const RunConfig& cfg) {
  const SystemSpec& sys = *cfg.system;
  const auto& s = cfg.suite;
  json reports = json::object();
  Outcome o;
  auto record = [&](const PropertyReport& r) {
    reports[r.property] = to_json(r);
    if (!r.holds()) o.code = kPropertyFailure;
  };
  for (const auto& name : s.select) {
    if (name == "monotone") {
      const auto pairs = sample_ordered_pairs(sys, cfg.region, s.monotone_pairs,
                                              derive_seed(cfg.seed, {0x51}), s.pair_length);
      record(monotone_flow_check(sys, pairs, s.monotone_t_grid, cfg.integrator, cfg.threads));
    } else if (name == "dichotomy") {
      const auto pairs = sample_ordered_pairs(sys, cfg.region, s.dichotomy_pairs,
                                              derive_seed(cfg.seed, {0x52}), s.pair_length);
      record(dichotomy_suite(sys, pairs, cfg.omega, cfg.threads));
    } else if (name == "nonordering") {
      PropertyReport all;
      all.property = "nonordering";
      for (const auto& p : region_points(cfg, s.omega_points, 0x53)) {
        merge(all, nonordering_check(sys, omega_estimate(sys, p, cfg.omega)));
      }
      record(all);
    } else if (name == "intersection") {
      PropertyReport all;
      all.property = "intersection";
      for (const auto& [x, y] : sample_ordered_pairs(sys, cfg.region, s.omega_points,
                                                     derive_seed(cfg.seed, {0x54}), s.pair_length)) {
        merge(all, intersection_check(sys, x, y, cfg.omega));
      }
      record(all);
    } else if (name == "order_recurrence") {
      PropertyReport all;
      all.property = "order_recurrence";
      for (const auto& p : region_points(cfg, s.omega_points, 0x55)) {
        merge(all, order_recurrence_check(sys, p, 1.0, cfg.omega));
      }
      record(all);
    } else if (name == "order_openness") {
      PropertyReport all;
      all.property = "order_openness";
      std::uint64_t k = 0;
      for (const auto& [x, y] : sample_ordered_pairs(sys, cfg.region, s.omega_points,
                                                     derive_seed(cfg.seed, {0x56}), s.pair_length)) {
        PropertyReport r = order_openness_probe(sys, x, y, s.openness_delta, s.openness_samples,
                                                derive_seed(cfg.seed, {0x57, k++}), {}, cfg.integrator);
        // t0 is a per-pair quantity; keep the largest.
        const auto t0 = r.extras.find("t0");
        const double t0v = t0 == r.extras.end() ? -1.0 : t0->second;
        r.extras.clear();
        merge(all, r);
        if (t0v >= 0.0) all.extras["max_t0"] = std::max(all.extras["max_t0"], t0v);
      }
      record(all);
    } else {
      throw ConfigError("unknown suite '" + name + "'");
    }
  }
  o.body = {{"reports", reports}, {"all_hold", o.code == kPass}};
  return o;
}

Outcome census(const RunConfig& cfg, const fs::path& dir) {
  const SystemSpec& sys = *cfg.system;
  const Vec base = cfg.census_base.value_or(cfg.region.center());
  if (base.size() != sys.dim()) throw ConfigError("census.base has the wrong dimension");
  CensusOptions opts = cfg.census;
  opts.budget.integrator = cfg.integrator;
  const CensusReport r = run_census(sys, Point{base}, cfg.region, opts);
  std::ostringstream csv;
  write_census_csv(csv, r);
  write_file(dir / "census_grid.csv", csv.str());
  Outcome o;
  o.body = to_json(r);
  o.body["grid_csv"] = "census_grid.csv";
  if (!r.estimators_agree || r.ordered.failures > 0 || !r.countability.stable()) {
    o.code = kPropertyFailure;
  }
  return o;
}

}  // namespace

int run(const std::string& subcommand, const RunConfig& cfg, std::ostream& log) {
  try {
    const fs::path dir = prepare_output(cfg);
    Outcome o;
    if (subcommand == "verify-dp") o = verify_dp(cfg);
    else if (subcommand == "order") o = order(cfg);
    else if (subcommand == "omega") o = omega(cfg);
    else if (subcommand == "suite") o = suite(cfg);
    else if (subcommand == "census") o = census(cfg, dir);
    else throw ConfigError("unknown subcommand '" + subcommand + "'");
    json doc = envelope(subcommand, cfg);
    doc["result"] = o.body;
    doc["exit_code"] = o.code;
    const fs::path path = dir / (subcommand + ".json");
    write_file(path, doc.dump(2) + "\n");
    log << subcommand << ": wrote " << path.string() << " (exit " << o.code << ")\n";
    return o.code;
  } catch (const ArgumentError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    log << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const DomainError& e) {
    log << "numeric error: " << e.what() << '\n';
    return kNumericError;
  }
}

namespace {

void summarize(const json& doc, std::ostream& os) {
  const std::string cmd = doc.value("command", "?");
  const json& r = doc.at("result");
  os << "== " << cmd << " on " << doc.value("system", "?") << " (seed " << doc.value("seed", 0)
     << ", exit " << doc.value("exit_code", -1) << ")\n";
  if (cmd == "verify-dp") {
    os << "  verdict " << r.value("verdict", "?") << ", min margin " << r.value("min_margin", 0.0)
       << " over " << r.at("reports").size() << " base points\n";
  } else if (cmd == "order") {
    os << "  relation " << r.value("relation", "?") << " via " << r.value("oracle", "?")
       << (r.value("equality", false) ? " (equal points)" : "") << "\n";
  } else if (cmd == "omega") {
    os << "  class " << r.value("class", "?") << ", budget used " << r.value("budget_used", 0.0);
    if (r.contains("period")) os << ", period " << r["period"].get<double>();
    os << "\n";
  } else if (cmd == "suite") {
    for (const auto& [name, rep] : r.at("reports").items()) {
      os << "  " << std::left << std::setw(18) << name << " tested " << rep.value("tested", 0)
         << "  pass " << rep.value("pass", 0) << "  fail " << rep.value("fail", 0) << "  undecided "
         << rep.value("undecided", 0) << "\n";
    }
  } else if (cmd == "census") {
    const auto& f = r.at("fubini");
    os << "  non-convergent fraction " << f.value("fraction", 0.0) << " (measure "
       << f.value("measure", 0.0) << ")\n";
    if (r.contains("monte_carlo")) {
      os << "  Monte-Carlo fraction " << r["monte_carlo"].value("fraction", 0.0) << ", z = "
         << r.value("z_score", 0.0) << "\n";
    }
    for (const auto& l : r.at("refinement")) {
      os << "  " << l.value("lines", 0) << "x" << l.value("points", 0) << ": fraction "
         << l.at("fubini").value("fraction", 0.0) << ", max clusters " << l.value("max_clusters", 0)
         << "\n";
    }
    os << "  max clusters per line " << r.at("countability").value("max_clusters", 0)
       << ", refinement stable " << (r.at("countability").value("stable", false) ? "yes" : "no")
       << "\n";
  }
}

}  // namespace

int report(const std::vector<std::string>& json_paths, std::ostream& os) {
  if (json_paths.empty()) {
    os << "no reports found\n";
    return kConfigError;
  }
  try {
    for (const auto& p : json_paths) {
      std::ifstream in(p);
      if (!in) throw ConfigError("cannot read '" + p + "'");
      const json doc = json::parse(in);
      if (doc.value("schema_version", -1) != kSchemaVersion) {
        throw ConfigError("'" + p + "' has an unsupported schema_version");
      }
      summarize(doc, os);
    }
  } catch (const json::exception& e) {
    os << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ArgumentError& e) {
    os << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
  return kPass;
}

}  // namespace dpflow::cli
