#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpflow/cli/commands.hpp"
#include "dpflow/cli/config.hpp"

using namespace dpflow;
using namespace dpflow::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dpflow_unit_" + name);
  fs::remove_all(p);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}
}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_config({{"system", "bistable_tanh"}, {"seed", 7}});
  CHECK(c.system->name == "bistable_tanh");
  CHECK(c.seed == 7);
  CHECK(c.region.lower[0] == -2.0);
  CHECK_THROWS_AS(parse_config({{"system", "bistable_tanh"}, {"sed", 7}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"system", "bistable_tanh"}, {"schema_version", 99}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json::object()), ConfigError);
  const RunConfig p = parse_config(
      {{"system", {{"builtin", "linear_metzler"}, {"params", {{"a12", 0.5}}}}}});
  CHECK(p.system->jacobian(Vec::Zero(2))(0, 1) == 0.5);
}

TEST_CASE("inline systems") {
  const json j = {{"system",
                   {{"name", "toy"},
                    {"variables", {"x", "y"}},
                    {"field", {"-x + k*y", "-y + k*x"}},
                    {"jacobian", json::array({json::array({"-1", "k"}), json::array({"k", "-1"})})},
                    {"params", {{"k", 0.5}}},
                    {"cone", {{"kind", "generators"}, {"generators", {{1, 0}, {1, 1}}}}}}},
                  {"region", {{"lower", {-1, -1}}, {"upper", {2, 2}}}}};
  const RunConfig c = parse_config(j);
  CHECK(c.system->name == "toy");
  const Vec f = c.system->eval((Vec(2) << 1, 2).finished());
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(f[1] == doctest::Approx(-1.5));
  CHECK(c.region.upper[1] == 2.0);
  json bad = j;
  bad["system"]["field"] = {"-x"};
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("overrides and small parsers") {
  CHECK(parse_resolution("101x201") == std::pair{101, 201});
  CHECK_THROWS_AS(parse_resolution("101"), ConfigError);
  CHECK(parse_vector("0.5,-1").isApprox((Vec(2) << 0.5, -1).finished()));
  RunConfig c = parse_config({{"system", "rotation"}});
  Overrides o;
  o.seed = 9;
  o.resolution = std::pair{5, 7};
  o.budget_T = 12.0;
  apply(c, o);
  CHECK(c.seed == 9);
  CHECK(c.census.n_lines == 5);
  CHECK(c.census.n_points == 7);
  CHECK(c.omega.t_max == 12.0);
}

TEST_CASE("commands write versioned JSON and use exit codes") {
  const fs::path dir = scratch("cmd");
  RunConfig c = parse_config({{"system", "rotation"}, {"output", dir.string()}});
  std::ostringstream log;
  CHECK(run("verify-dp", c, log) == kPropertyFailure);
  const json dp = read_json(dir / "verify-dp.json");
  CHECK(dp.at("schema_version") == kSchemaVersion);
  CHECK(dp.at("result").at("verdict") == "Violated");

  c.x = (Vec(2) << 0.5, 0.0).finished();
  CHECK(run("omega", c, log) == kPass);
  CHECK(read_json(dir / "omega.json").at("result").at("class") == "PeriodicOrbit");
  c.x.reset();
  CHECK(run("omega", c, log) == kConfigError);

  RunConfig b = parse_config({{"system", "bistable_tanh"}, {"output", dir.string()}});
  b.x = (Vec(2) << 0.0, 0.0).finished();
  b.y = (Vec(2) << 1.0, 0.5).finished();
  CHECK(run("order", b, log) == kPass);
  CHECK(read_json(dir / "order.json").at("result").at("relation") == "StrictlyLess");

  std::ostringstream summary;
  CHECK(report({(dir / "order.json").string(), (dir / "omega.json").string()}, summary) == kPass);
  CHECK(summary.str().find("StrictlyLess") != std::string::npos);
  CHECK(report({(dir / "missing.json").string()}, summary) == kConfigError);
  fs::remove_all(dir);
}

TEST_CASE("unwritable output is a configuration error") {
  const fs::path file = scratch("blocker");
  std::ofstream(file) << "x";
  RunConfig c = parse_config({{"system", "rotation"}, {"output", (file / "sub").string()}});
  std::ostringstream log;
  CHECK(run("verify-dp", c, log) == kConfigError);
  fs::remove(file);
}

TEST_CASE("census output is deterministic apart from the timestamp") {
  const fs::path d1 = scratch("det1"), d2 = scratch("det2");
  auto once = [](const fs::path& d) {
    RunConfig c = parse_config({{"system", "bistable_tanh"},
                                {"census", {{"lines", 9}, {"points", 15}}},
                                {"output", d.string()},
                                {"seed", 5}});
    std::ostringstream log;
    REQUIRE(run("census", c, log) == kPass);
    json j = read_json(d / "census.json");
    j.erase("generated_at");
    j["config"].erase("output");
    return j;
  };
  CHECK(once(d1) == once(d2));
  std::ifstream a(d1 / "census_grid.csv"), b(d2 / "census_grid.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("line_index,point_index,x0,x1,class", 0) == 0);
  fs::remove_all(d1);
  fs::remove_all(d2);
}
