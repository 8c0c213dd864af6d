// Acceptance checks. Usage: acceptance [n ...]; with no argument every check runs.
// Each check prints one PASS/FAIL line; the exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpflow/census.hpp"
#include "dpflow/cli/commands.hpp"
#include "dpflow/cli/config.hpp"
#include "dpflow/cones.hpp"
#include "dpflow/dynamics.hpp"
#include "dpflow/invariance.hpp"
#include "dpflow/limits.hpp"
#include "dpflow/rng.hpp"
#include "dpflow/spd.hpp"
#include "dpflow/systems.hpp"
#include "oracles.hpp"

using namespace dpflow;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Result generator_membership() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(2024, {1}));
  std::size_t decided = 0, disagreements = 0, members = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<Vec> gens;
    const bool positive = trial % 2 == 0;  // half pointed in the orthant, half arbitrary
    for (int i = 0; i < k; ++i) {
      Vec g = gaussian_vector(rng, n);
      gens.push_back(positive ? Vec(g.cwiseAbs()) : g);
    }
    const Vec v = gaussian_vector(rng, n);
    const double m = ConeSpec::generators(gens).margin(v);
    if (std::abs(m) <= 1e-8) continue;
    ++decided;
    members += m > 0 ? 1 : 0;
    if ((m > 0) != oracle::in_generated_cone(gens, v)) ++disagreements;
  }
  const double dt = seconds_since(t0);
  return {disagreements == 0 && decided >= 500 && members > 0 && dt < 5.0,
          fmt("generator membership vs exhaustive NNLS: %zu disagreements over %zu decided of 1000 (%zu inside), %.2f s",
              disagreements, decided, members, dt)};
}

Result linearization() {
  const auto t0 = Clock::now();
  const SystemSpec s = systems::linear_metzler({});
  const Mat expect = oracle::expm_symmetric_toeplitz(-2, 1, 1.0);
  double err = 0.0;
  for (const Vec& x : {v2(0, 0), v2(1.5, -0.5), v2(-2, 2)}) {
    const auto [end, lin] = variational_flow(s, Point{x}, 1.0);
    err = std::max(err, (lin.matrix - expect).cwiseAbs().maxCoeff());
  }
  double cocycle = 0.0;
  for (const auto& [t, u] : {std::pair{1.0, 1.0}, {0.3, 2.2}, {2.5, 0.5}}) {
    cocycle = std::max(cocycle, cocycle_check(s, Point{v2(0.7, -1.1)}, t, u));
  }
  const double dt = seconds_since(t0);
  return {err <= 1e-6 && cocycle <= 1e-7 && dt < 1.0,
          fmt("d phi_1 vs e^A: max entry error %.2e, cocycle residual %.2e, %.3f s", err, cocycle, dt)};
}

Result dp_verdicts() {
  const auto t0 = Clock::now();
  const std::vector<double> grid{0.1, 1.0, 10.0};
  bool ok = true;
  std::string detail;
  for (const char* name : {"linear_metzler", "bistable_tanh"}) {
    const SystemSpec s = systems::builtin(name, {});
    double worst = std::numeric_limits<double>::infinity();
    for (const Vec& x : {v2(0, 0), v2(1.2, -0.8), v2(-1.5, 0.4), v2(0.9, 0.9)}) {
      const DPReport r = check_dp(s, Point{x}, grid, 8, 7);
      worst = std::min(worst, r.min_margin);
      ok = ok && r.verdict == DPVerdict::SDPConsistent;
    }
    ok = ok && worst > 0.0;
    detail += fmt("%s min margin %.3e; ", name, worst);
  }
  const DPReport rot = check_dp(systems::rotation({}), Point{v2(0.5, 0.2)}, grid, 8, 7);
  const bool violated = rot.verdict == DPVerdict::Violated && rot.witness.has_value();
  ok = ok && violated;
  const double dt = seconds_since(t0);
  detail += fmt("rotation %s%s, %.2f s", to_string(rot.verdict),
                violated ? fmt(" (witness t=%g margin %.3f)", rot.witness->t, rot.witness->margin).c_str() : "",
                dt);
  return {ok && dt < 10.0, "SDP verdicts: " + detail};
}

Result monotone_pairs() {
  const auto t0 = Clock::now();
  const SystemSpec s = systems::bistable_tanh({});
  const Box box{v2(-2, -2), v2(2, 2)};
  const auto pairs = sample_ordered_pairs(s, box, 500, derive_seed(2024, {4}));
  const PropertyReport r = monotone_flow_check(s, pairs, {0.1, 0.5, 1, 2, 5, 10, 20});
  const double dt = seconds_since(t0);
  return {r.fail == 0 && r.tested == 500 && dt < 120.0,
          fmt("monotone flow on %zu ordered pairs, t <= 20: %zu pass, %zu fail, %zu undecided, %.2f s",
              r.tested, r.pass, r.fail, r.undecided, dt)};
}

Result dichotomy() {
  const auto t0 = Clock::now();
  const SystemSpec s = systems::bistable_tanh({});
  OmegaBudget b;
  b.t_max = 50.0;
  const auto pairs = sample_ordered_pairs(s, s.region, 200, derive_seed(2024, {5}));
  const PropertyReport r = dichotomy_suite(s, pairs, b);
  const double dt = seconds_since(t0);
  const double a = r.extras.count("branch_a") ? r.extras.at("branch_a") : 0.0;
  const double bb = r.extras.count("branch_b") ? r.extras.at("branch_b") : 0.0;
  const double decided = static_cast<double>(r.decided()) / 200.0;
  return {decided >= 0.9 && r.fail == 0 && a >= 10 && bb >= 10 && dt < 300.0,
          fmt("dichotomy on 200 ordered pairs, T = 50: %.1f%% decided, %zu fail, branch a %g, branch b %g, %.2f s",
              100 * decided, r.fail, a, bb, dt)};
}

Result spd_invariance() {
  const auto t0 = Clock::now();
  double metric = 0.0;
  std::size_t mismatches = 0, trials = 0;
  for (int n : {2, 3}) {
    const Manifold m = Manifold::spd(n);
    const TransportMap g = TransportMap::spd_congruence();
    const ConeField field = ConeField::transported(
        m, Point{spd::to_coords(Mat::Identity(n, n))}, ConeSpec::psd(n), g);
    const InvarianceReport r =
        verify_transport_invariance(m, g, field, spd_sampler(n), 10000, derive_seed(2024, {6, std::uint64_t(n)}));
    metric = std::max(metric, r.max_metric_residual);
    mismatches += r.cone_mismatches;
    trials += r.trials;
  }
  const double dt = seconds_since(t0);
  return {metric <= 1e-9 && mismatches == 0 && dt < 30.0,
          fmt("SPD transport over %zu trials: metric residual %.2e, %zu cone mismatches, %.2f s", trials,
              metric, mismatches, dt)};
}

Result census_resolution() {
  const auto t0 = Clock::now();
  const SystemSpec s = systems::bistable_tanh({});
  CensusOptions o;
  o.n_lines = 101;
  o.n_points = 201;
  o.refinement_levels = 2;
  o.monte_carlo = false;
  const CensusReport r = run_census(s, Point{v2(0, 0)}, Box{v2(-2, -2), v2(2, 2)}, o);
  const double f1 = r.refinement[0].fubini.fraction, f2 = r.refinement[1].fubini.fraction;
  const double drop = f2 > 0 ? f1 / f2 : std::numeric_limits<double>::infinity();
  const double dt = seconds_since(t0);
  const bool ok = f1 <= 0.01 && drop >= 1.8 && r.countability.max_clusters <= 1 &&
                  r.refinement[1].max_clusters <= 1 && r.countability.stable() && dt < 900.0;
  return {ok, fmt("census 101x201: non-convergent fraction %.4f, drop at 2x %.2f, max clusters %d/%d, "
                  "unstable lines %zu, %.1f s",
                  f1, drop, r.countability.max_clusters, r.refinement[1].max_clusters,
                  r.countability.unstable_lines, dt)};
}

Result estimator_agreement() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const char* name : {"bistable_tanh", "linear_metzler"}) {
    const SystemSpec s = systems::builtin(name, {});
    CensusOptions o;
    o.refinement_levels = 1;
    o.seed = derive_seed(2024, {8});
    const CensusReport r = run_census(s, Point{s.region.center()}, s.region, o);
    ok = ok && r.monte_carlo.has_value() && std::abs(r.z_score) <= 3.0;
    detail += fmt("%s Fubini %.4f vs MC %.4f (z = %.2f); ", name, r.fubini.fraction,
                  r.monte_carlo ? r.monte_carlo->fraction : -1.0, r.z_score);
  }
  return {ok, "estimator agreement: " + detail + fmt("%.1f s", seconds_since(t0))};
}

nlohmann::json run_and_read(const std::string& command, const fs::path& dir) {
  cli::RunConfig cfg = cli::parse_config(nlohmann::json::parse(R"({
    "system": "bistable_tanh",
    "census": {"lines": 31, "points": 61},
    "suite": {"monotone_pairs": 50, "dichotomy_pairs": 20},
    "seed": 99
  })"));
  cli::Overrides o;
  o.out = dir.string();
  cli::apply(cfg, o);
  std::ostringstream log;
  cli::run(command, cfg, log);
  std::ifstream in(dir / (command + ".json"));
  auto j = nlohmann::json::parse(in);
  j.erase("generated_at");
  return j;
}

Result reproducibility() {
  const auto t0 = Clock::now();
  const fs::path base = fs::temp_directory_path() / "dpflow_acceptance_repro";
  fs::remove_all(base);
  bool same = true;
  for (const std::string cmd : {"census", "suite", "verify-dp"}) {
    same = same && run_and_read(cmd, base / "a") == run_and_read(cmd, base / "b");
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool csv = slurp(base / "a" / "census_grid.csv") == slurp(base / "b" / "census_grid.csv");
  fs::remove_all(base);
  return {same && csv, fmt("repeat runs with one seed: JSON %s, census grid %s, %.1f s",
                           same ? "identical" : "differs", csv ? "identical" : "differs",
                           seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Result()>> checks{
      generator_membership, linearization, dp_verdicts,        monotone_pairs, dichotomy,
      spd_invariance,       census_resolution, estimator_agreement, reproducibility};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::stoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(checks.size()); ++i) which.push_back(i);
  int failures = 0;
  for (int k : which) {
    if (k < 1 || k > static_cast<int>(checks.size())) {
      std::printf("FAIL [%d] no such check\n", k);
      ++failures;
      continue;
    }
    Result r;
    try {
      r = checks[k - 1]();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%d] %s\n", r.pass ? "PASS" : "FAIL", k, r.detail.c_str());
    std::fflush(stdout);
    failures += r.pass ? 0 : 1;
  }
  return failures;
}
