#include "vgnav/errors.hpp"
#include "vgnav/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace vgnav;

namespace {

void print_report(const SuiteReport& report) {
  fmt::print("scenario {}\n", report.scenario);
  for (const auto& m : report.modes) {
    fmt::print("  {:<3} trials {:>2}  success {:5.1f}%  path {:6.2f} +- {:5.2f} m  vmax {:4.2f} +- {:4.2f} m/s  cycle {:6.1f} ms\n",
               to_string(m.mode), m.trials, m.success_rate(), m.path_length.mean, m.path_length.std,
               m.max_velocity.mean, m.max_velocity.std, m.cycle_ms.mean);
    for (const auto& [region, pct] : m.avoidance) fmt::print("      avoid {:<12} {:5.1f}%\n", region, pct);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual-geometry sparse GP navigation simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string mode_name = "VG";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int trials = 0;

  auto* run = app.add_subcommand("run", "Run a single trial");
  run->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode_name, "Planner mode: G, V or VG");
  run->add_option("--seed", seed, "Trial seed (default: the config seed)")->each([&](const std::string&) { seed_set = true; });
  run->add_option("--out-dir", out_dir, "Directory for the trace and summary");

  auto* suite = app.add_subcommand("suite", "Run every configured mode for N trials");
  suite->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  suite->add_option("--mode", mode_name, "Restrict to one planner mode");
  suite->add_option("--seed", seed, "First trial seed")->each([&](const std::string&) { seed_set = true; });
  suite->add_option("--trials", trials, "Trials per mode")->check(CLI::PositiveNumber);
  suite->add_option("--out-dir", out_dir, "Directory for traces and summary.json");

  std::string world_name;
  auto* worldgen = app.add_subcommand("worldgen", "Write the bundled worlds as world files");
  worldgen->add_option("--name", world_name, "Generator name (default: all)");
  worldgen->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* validate = app.add_subcommand("validate", "Check a scenario config");
  validate->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*worldgen) {
      fs::create_directories(out_dir);
      const auto names = world_name.empty() ? world_generator_names() : std::vector<std::string>{world_name};
      for (const auto& n : names) {
        const fs::path path = fs::path(out_dir) / (n + ".world");
        write_world(path, make_world(n));
        fmt::print("wrote {}\n", path.string());
      }
      return 0;
    }

    ScenarioConfig cfg = load_scenario(config);
    if (seed_set) cfg.seed = seed;
    cfg.validate();
    const World world = cfg.build_world();

    if (*validate) {
      fmt::print("{}: ok ({} modes, {} trials, world {}x{})\n", config, cfg.modes.size(), cfg.trials,
                 world.cols(), world.rows());
      return 0;
    }

    if (*run) {
      const Mode mode = parse_mode(mode_name);
      const TrialResult r = run_trial(cfg, world, mode, cfg.seed);
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const std::string tag = fmt::format("{}_{}", to_string(mode), cfg.seed);
        emit_traces(r.traces, fs::path(out_dir) / fmt::format("trace_{}.csv", tag));
        emit_timings(r.traces, fs::path(out_dir) / fmt::format("timing_{}.csv", tag));
        std::ofstream(fs::path(out_dir) / fmt::format("summary_{}.json", tag)) << summary_json(r.summary) << '\n';
      }
      fmt::print("{}\n", summary_json(r.summary));
      return 0;
    }

    if (*suite) {
      if (trials > 0) cfg.trials = trials;
      if (suite->count("--mode")) cfg.modes = {parse_mode(mode_name)};
      const SuiteReport report =
          run_suite(cfg, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir));
      print_report(report);
      return 0;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
