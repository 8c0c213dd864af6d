#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "dpflow/cli/commands.hpp"
#include "dpflow/systems.hpp"

namespace cli = dpflow::cli;

int main(int argc, char** argv) {
  CLI::App app{"dpflow: differential positivity, conal order and convergence census"};
  app.require_subcommand(1);

  std::string config_path, system_name, out, resolution, x, y;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double budget_T = 0.0;
  std::vector<std::string> report_files;

  for (const auto& name : cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    if (name == "report") {
      sub->add_option("files", report_files, "JSON reports (default: every *.json in --out)");
      sub->add_option("--out", out, "directory holding prior reports");
      continue;
    }
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--system", system_name, "built-in system name (instead of a config)");
    sub->add_option("--seed", seed, "global seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--resolution", resolution, "census resolution <lines>x<points>");
    sub->add_option("--budget-T", budget_T, "omega-limit time budget")->check(CLI::PositiveNumber);
    sub->add_option("--x", x, "query point x, comma separated");
    sub->add_option("--y", y, "query point y, comma separated");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  if (command == "report") {
    if (report_files.empty()) {
      const std::filesystem::path dir(out.empty() ? "out" : out);
      std::error_code ec;
      for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.path().extension() == ".json") report_files.push_back(entry.path().string());
      }
      std::sort(report_files.begin(), report_files.end());
    }
    return cli::report(report_files, std::cout);
  }

  cli::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = cli::load_config(config_path);
    } else if (!system_name.empty()) {
      cfg = cli::parse_config({{"system", system_name}});
    } else {
      throw cli::ConfigError("either --config or --system is required");
    }
    auto* sub = app.get_subcommands().front();
    cli::Overrides o;
    if (sub->count("--seed")) o.seed = seed;
    if (!out.empty()) o.out = out;
    if (sub->count("--threads")) o.threads = threads;
    if (!resolution.empty()) o.resolution = cli::parse_resolution(resolution);
    if (sub->count("--budget-T")) o.budget_T = budget_T;
    if (!x.empty()) o.x = cli::parse_vector(x);
    if (!y.empty()) o.y = cli::parse_vector(y);
    cli::apply(cfg, o);
  } catch (const dpflow::ArgumentError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return cli::kConfigError;
  }
  return cli::run(command, cfg, std::cerr);
}
