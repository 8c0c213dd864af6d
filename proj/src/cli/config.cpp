#include "dpflow/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dpflow/expr.hpp"
#include "dpflow/spd.hpp"
#include "dpflow/systems.hpp"

namespace dpflow::cli {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be a table");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

double positive(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const double v = j.at(key).get<double>();
  if (!(v > 0.0)) throw ConfigError(where + "." + key + " must be > 0");
  return v;
}

Vec vec_of(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

systems::Params params_of(const json& j) {
  systems::Params p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw ConfigError("system.params must be a table");
  for (const auto& [k, v] : j.items()) p[k] = v.get<double>();
  return p;
}

ConeSpec cone_of(const json& j, int dim) {
  require_keys(j, "system.cone", {"kind", "normals", "generators", "axis", "aperture"});
  const std::string kind = j.value("kind", "orthant");
  auto vectors = [&](const char* key) {
    std::vector<Vec> out;
    for (const auto& item : j.at(key)) out.push_back(vec_of(item, std::string("system.cone.") + key));
    return out;
  };
  if (kind == "orthant") return ConeSpec::orthant(dim);
  if (kind == "halfspaces") return ConeSpec::halfspaces(vectors("normals"));
  if (kind == "generators") return ConeSpec::generators(vectors("generators"));
  if (kind == "second_order") {
    return ConeSpec::second_order(vec_of(j.at("axis"), "system.cone.axis"), j.at("aperture").get<double>());
  }
  throw ConfigError("unknown cone kind '" + kind + "'");
}

std::shared_ptr<const SystemSpec> inline_system(const json& j) {
  require_keys(j, "system", {"name", "manifold", "variables", "field", "jacobian", "params", "cone",
                             "declared", "region"});
  const auto vars = j.at("variables").get<std::vector<std::string>>();
  const auto exprs = j.at("field").get<std::vector<std::string>>();
  if (vars.empty() || vars.size() != exprs.size()) {
    throw ConfigError("system.field needs one expression per variable");
  }
  const int dim = static_cast<int>(vars.size());
  const auto params = params_of(j.value("params", json()));
  std::vector<Expression> field;
  for (const auto& e : exprs) field.push_back(Expression::parse(e, vars, params));

  const json mj = j.value("manifold", json{{"kind", "euclidean"}});
  require_keys(mj, "system.manifold", {"kind", "n"});
  const std::string mkind = mj.value("kind", "euclidean");
  std::optional<Manifold> manifold;
  std::optional<ConeField> cones;
  if (mkind == "euclidean") {
    manifold = Manifold::euclidean(dim);
    cones = ConeField::constant(cone_of(j.value("cone", json{{"kind", "orthant"}}), dim));
  } else if (mkind == "spd") {
    const int n = mj.at("n").get<int>();
    if (n < 1 || spd::chart_dim(n) != dim) {
      throw ConfigError("spd manifold of size n needs n(n+1)/2 variables");
    }
    if (j.contains("cone") && j["cone"].value("kind", "psd") != "psd") {
      throw ConfigError("spd systems use the transported PSD cone field");
    }
    manifold = Manifold::spd(n);
    cones = ConeField::transported(*manifold, Point{spd::to_coords(Mat::Identity(n, n))},
                                   ConeSpec::psd(n), TransportMap::spd_congruence());
  } else {
    throw ConfigError("unknown manifold kind '" + mkind + "'");
  }

  VectorField f = [field](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < field.size(); ++i) out[i] = field[i].eval(x);
  };
  JacobianFn df;
  if (j.contains("jacobian")) {
    const auto rows = j.at("jacobian").get<std::vector<std::vector<std::string>>>();
    if (rows.size() != vars.size()) throw ConfigError("system.jacobian must be dim x dim");
    std::vector<Expression> entries;
    for (const auto& row : rows) {
      if (row.size() != vars.size()) throw ConfigError("system.jacobian must be dim x dim");
      for (const auto& e : row) entries.push_back(Expression::parse(e, vars, params));
    }
    df = [entries, dim](const Vec& x) {
      Mat out(dim, dim);
      const std::span<const double> xs(x.data(), x.size());
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) out(r, c) = entries[r * dim + c].eval(xs);
      }
      return out;
    };
  }
  DeclaredProperties declared;
  if (j.contains("declared")) {
    const auto& d = j["declared"];
    require_keys(d, "system.declared", {"dp", "sdp", "h1", "h2", "h3"});
    declared = {d.value("dp", false), d.value("sdp", false), d.value("h1", false),
                d.value("h2", false), d.value("h3", false)};
  }
  Box region{Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0)};
  return std::make_shared<SystemSpec>(SystemSpec{j.value("name", "inline"), *manifold, *cones,
                                                 std::move(f), std::move(df), declared, region});
}

std::shared_ptr<const SystemSpec> system_of(const json& j) {
  if (j.is_string()) return std::make_shared<SystemSpec>(systems::builtin(j.get<std::string>()));
  if (j.contains("builtin")) {
    require_keys(j, "system", {"builtin", "params"});
    return std::make_shared<SystemSpec>(
        systems::builtin(j.at("builtin").get<std::string>(), params_of(j.value("params", json()))));
  }
  return inline_system(j);
}

std::vector<double> grid_of(const json& j, const std::string& what) {
  auto g = j.get<std::vector<double>>();
  if (g.empty()) throw ConfigError(what + " must not be empty");
  return g;
}

}  // namespace

RunConfig parse_config(const json& j) try {
  require_keys(j, "config", {"schema_version", "system", "region", "integrator", "order", "omega",
                             "census", "dp", "suite", "query", "seed", "threads", "output"});
  if (j.contains("schema_version") && j["schema_version"].get<int>() != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + j["schema_version"].dump());
  }
  if (!j.contains("system")) throw ConfigError("config needs a system");
  RunConfig cfg;
  cfg.source = j;
  cfg.system = system_of(j.at("system"));
  const int dim = cfg.system->dim();

  cfg.region = cfg.system->region;
  if (j.contains("region")) {
    const auto& r = j["region"];
    require_keys(r, "region", {"lower", "upper"});
    cfg.region = Box{vec_of(r.at("lower"), "region.lower"), vec_of(r.at("upper"), "region.upper")};
  } else if (j["system"].is_object() && j["system"].contains("region")) {
    const auto& r = j["system"]["region"];
    cfg.region = Box{vec_of(r.at("lower"), "region.lower"), vec_of(r.at("upper"), "region.upper")};
  }
  if (cfg.region.dim() != dim || cfg.region.upper.size() != dim) {
    throw ConfigError("region dimension does not match the system");
  }
  if (!((cfg.region.upper - cfg.region.lower).minCoeff() > 0.0)) {
    throw ConfigError("region must be non-degenerate");
  }

  if (j.contains("integrator")) {
    const auto& s = j["integrator"];
    require_keys(s, "integrator", {"rtol", "atol", "max_step", "initial_step", "escape_bound"});
    cfg.integrator.rtol = positive(s, "rtol", cfg.integrator.rtol, "integrator");
    cfg.integrator.atol = positive(s, "atol", cfg.integrator.atol, "integrator");
    cfg.integrator.escape_bound = positive(s, "escape_bound", cfg.integrator.escape_bound, "integrator");
    cfg.integrator.max_step = s.value("max_step", 0.0);
    cfg.integrator.initial_step = s.value("initial_step", 0.0);
    if (cfg.integrator.max_step < 0.0 || cfg.integrator.initial_step < 0.0) {
      throw ConfigError("integrator step sizes must be >= 0");
    }
  }
  if (j.contains("order")) {
    const auto& s = j["order"];
    require_keys(s, "order", {"epsilon", "step", "max_steps"});
    cfg.order.target_radius = positive(s, "epsilon", cfg.order.target_radius, "order");
    cfg.order.step = s.value("step", 0.0);
    cfg.order.max_steps = s.value("max_steps", cfg.order.max_steps);
    if (cfg.order.step < 0.0 || cfg.order.max_steps < 1) throw ConfigError("invalid order budget");
  }
  cfg.omega.integrator = cfg.integrator;
  if (j.contains("omega")) {
    const auto& s = j["omega"];
    require_keys(s, "omega", {"t_max", "eps_conv", "recurrence_tol", "sample_dt", "window", "n_samples"});
    cfg.omega.t_max = positive(s, "t_max", cfg.omega.t_max, "omega");
    cfg.omega.eps_conv = positive(s, "eps_conv", cfg.omega.eps_conv, "omega");
    cfg.omega.recurrence_tol = positive(s, "recurrence_tol", cfg.omega.recurrence_tol, "omega");
    cfg.omega.sample_dt = positive(s, "sample_dt", cfg.omega.sample_dt, "omega");
    cfg.omega.window = s.value("window", cfg.omega.window);
    cfg.omega.n_samples = s.value("n_samples", cfg.omega.n_samples);
    if (cfg.omega.window < 0.0 || cfg.omega.n_samples < 1) throw ConfigError("invalid omega budget");
  }
  if (j.contains("census")) {
    const auto& s = j["census"];
    require_keys(s, "census", {"lines", "points", "levels", "monte_carlo", "mc_samples", "base",
                               "ordered_fraction", "equilibrium_seeds"});
    cfg.census.n_lines = s.value("lines", cfg.census.n_lines);
    cfg.census.n_points = s.value("points", cfg.census.n_points);
    cfg.census.refinement_levels = s.value("levels", cfg.census.refinement_levels);
    cfg.census.monte_carlo = s.value("monte_carlo", cfg.census.monte_carlo);
    cfg.census.mc_samples = s.value("mc_samples", cfg.census.mc_samples);
    cfg.census.ordered_fraction = s.value("ordered_fraction", cfg.census.ordered_fraction);
    cfg.census.equilibrium_seeds = s.value("equilibrium_seeds", cfg.census.equilibrium_seeds);
    if (s.contains("base")) cfg.census_base = vec_of(s["base"], "census.base");
    if (cfg.census.n_lines < 1 || cfg.census.n_points < 1 || cfg.census.refinement_levels < 1) {
      throw ConfigError("census resolution must be positive");
    }
  }
  if (j.contains("dp")) {
    const auto& s = j["dp"];
    require_keys(s, "dp", {"points", "t_grid", "n_rays", "n_points"});
    if (s.contains("points")) {
      for (const auto& p : s["points"]) cfg.dp.points.push_back(vec_of(p, "dp.points"));
    }
    if (s.contains("t_grid")) cfg.dp.t_grid = grid_of(s["t_grid"], "dp.t_grid");
    cfg.dp.n_rays = s.value("n_rays", cfg.dp.n_rays);
    cfg.dp.n_points = s.value("n_points", cfg.dp.n_points);
  }
  if (j.contains("suite")) {
    const auto& s = j["suite"];
    require_keys(s, "suite", {"select", "monotone_pairs", "monotone_t_grid", "dichotomy_pairs",
                              "pair_length", "omega_points", "openness_delta", "openness_samples"});
    if (s.contains("select")) cfg.suite.select = s["select"].get<std::vector<std::string>>();
    cfg.suite.monotone_pairs = s.value("monotone_pairs", cfg.suite.monotone_pairs);
    if (s.contains("monotone_t_grid")) cfg.suite.monotone_t_grid = grid_of(s["monotone_t_grid"], "suite.monotone_t_grid");
    cfg.suite.dichotomy_pairs = s.value("dichotomy_pairs", cfg.suite.dichotomy_pairs);
    cfg.suite.pair_length = positive(s, "pair_length", cfg.suite.pair_length, "suite");
    cfg.suite.omega_points = s.value("omega_points", cfg.suite.omega_points);
    cfg.suite.openness_delta = positive(s, "openness_delta", cfg.suite.openness_delta, "suite");
    cfg.suite.openness_samples = s.value("openness_samples", cfg.suite.openness_samples);
  }
  if (j.contains("query")) {
    const auto& s = j["query"];
    require_keys(s, "query", {"x", "y"});
    if (s.contains("x")) cfg.x = vec_of(s["x"], "query.x");
    if (s.contains("y")) cfg.y = vec_of(s["y"], "query.y");
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.out = j.value("output", cfg.out);
  cfg.census.budget = cfg.omega;
  cfg.census.seed = cfg.seed;
  cfg.census.threads = cfg.threads;
  return cfg;
} catch (const json::exception& e) {
  throw ConfigError(std::string("malformed config: ") + e.what());
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void apply(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = cfg.census.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.threads) cfg.threads = cfg.census.threads = *o.threads;
  if (o.resolution) {
    cfg.census.n_lines = o.resolution->first;
    cfg.census.n_points = o.resolution->second;
  }
  if (o.budget_T) {
    if (!(*o.budget_T > 0.0)) throw ConfigError("--budget-T must be > 0");
    cfg.omega.t_max = cfg.census.budget.t_max = *o.budget_T;
  }
  if (o.x) cfg.x = o.x;
  if (o.y) cfg.y = o.y;
}

std::pair<int, int> parse_resolution(const std::string& text) {
  const auto pos = text.find('x');
  try {
    if (pos == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const int lines = std::stoi(text.substr(0, pos), &used);
    if (used != pos) throw std::invalid_argument(text);
    const std::string rest = text.substr(pos + 1);
    const int points = std::stoi(rest, &used);
    if (used != rest.size() || lines < 1 || points < 1) throw std::invalid_argument(text);
    return {lines, points};
  } catch (const std::logic_error&) {
    throw ConfigError("resolution must look like <lines>x<points>, got '" + text + "'");
  }
}

Vec parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("malformed vector '" + text + "'");
    }
  }
  if (values.empty()) throw ConfigError("empty vector");
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace dpflow::cli
