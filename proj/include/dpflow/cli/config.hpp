#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpflow/census.hpp"
#include "dpflow/dynamics.hpp"
#include "dpflow/errors.hpp"
#include "dpflow/limits.hpp"
#include "dpflow/order.hpp"

namespace dpflow::cli {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

struct DPSettings {
  std::vector<Vec> points;  // empty: region centre plus seeded samples
  std::vector<double> t_grid{0.1, 1.0, 10.0};
  int n_rays = 8;
  int n_points = 4;
};

struct SuiteSettings {
  std::vector<std::string> select{"monotone", "dichotomy", "nonordering", "intersection",
                                  "order_recurrence", "order_openness"};
  std::size_t monotone_pairs = 200;
  std::vector<double> monotone_t_grid{0.1, 1.0, 5.0, 20.0};
  std::size_t dichotomy_pairs = 50;
  double pair_length = 1.0;
  int omega_points = 4;
  double openness_delta = 0.01;
  int openness_samples = 8;
};

/// Everything a subcommand needs, validated.
struct RunConfig {
  nlohmann::json source;  // the parsed file, echoed into reports
  std::shared_ptr<const SystemSpec> system;
  Box region;
  IntegratorOptions integrator;
  OrderBudget order;
  OmegaBudget omega;
  CensusOptions census;
  std::optional<Vec> census_base;  // default: region centre
  DPSettings dp;
  SuiteSettings suite;
  std::optional<Vec> x, y;  // order / omega queries
  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::string out = "out";
};

/// Builds a config from JSON; throws ConfigError on malformed or invalid input.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::pair<int, int>> resolution;  // lines x points
  std::optional<double> budget_T;
  std::optional<Vec> x, y;
};

void apply(RunConfig& cfg, const Overrides& o);

/// "101x201" -> {101, 201}.
std::pair<int, int> parse_resolution(const std::string& text);
/// "0.5,1" -> vector.
Vec parse_vector(const std::string& text);

}  // namespace dpflow::cli
