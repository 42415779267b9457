#pragma once

// Scenario configuration, the closed-loop trial runner and suite metrics.

#include "vgnav/gp_core.hpp"
#include "vgnav/planner.hpp"
#include "vgnav/simworld.hpp"
#include "vgnav/vision.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vgnav {

/// Per-model fitting budget and hyperparameter box. Training sets larger
/// than max_points are thinned with a fixed stride before fitting. A frozen
/// hyperparameter keeps its configured value for the whole trial.
struct GpSettings {
  int num_inducing = 100;
  int max_points = 600;
  int iterations = 5;
  RqKernelParams initial_kernel{10.0, 0.1, 1.0};
  double noise_variance = 0.05;
  double length_scale_min = 1e-3;
  double length_scale_max = 50.0;
  double mixture_weight_min = 2.5e-3;
  double mixture_weight_max = 400.0;
  bool fit_signal_variance = true;
  bool fit_length_scale = true;
  bool fit_mixture_weight = true;
  bool fit_noise_variance = true;
  bool warm_start = true;

  [[nodiscard]] OptimSettings optim_settings(AzimuthMetric metric) const;

  void validate(const std::string& name) const;
};

/// One cold fit: stride-thins to max_points, then fits from the configured
/// initial hyperparameters within the configured box.
SgpModel fit_settings(TrainingSet train, const GpSettings& settings, AzimuthMetric metric);

/// Prediction lattices. The elevation range defaults to the planner's
/// elevation bounds.
struct LatticeSettings {
  double azimuth_resolution = deg2rad(2.0);
  double elevation_resolution = deg2rad(1.0);
  std::optional<double> elevation_min;
  std::optional<double> elevation_max;
};

struct TerminationRules {
  double dt = 0.1;
  double goal_tolerance = 0.5;
  double stuck_timeout = 10.0;
  double max_time = 300.0;
  double no_viable_timeout = 30.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string world_generator;      // one of world_generator_names(), or empty
  std::filesystem::path world_file; // used when no generator is named
  std::optional<Pose> spawn;        // overrides the world's spawn
  std::optional<Vec2> goal;         // overrides the world's goal
  double spawn_jitter_position = 0.1;
  double spawn_jitter_heading = 0.03;
  std::vector<Mode> modes{Mode::G, Mode::V, Mode::VG};
  int trials = 15;
  std::uint64_t seed = 1;
  SemanticClassMap class_map;
  PlannerConfig planner;
  // When set, planner.reference_distance is replaced by the spawn-goal
  // distance at the start of each trial.
  bool auto_reference_distance = true;
  LidarModel lidar;
  CameraModel camera;
  KinematicLimits limits;
  GpSettings geometry_gp;
  GpSettings depth_gp;
  GpSettings nav_gp;
  LatticeSettings lattice;
  TerminationRules termination;
  std::map<Mode, bool> recovery{{Mode::G, true}, {Mode::V, false}, {Mode::VG, true}};

  /// Checks ranges and that every referenced file and class exists.
  void validate() const;
  [[nodiscard]] World build_world() const;
};

/// Parses a JSON scenario; relative paths resolve against `base_dir`.
ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct CycleTiming {
  double fit_g = 0.0;
  double predict_g = 0.0;
  double fit_v = 0.0;
  double predict_v = 0.0;
  double total = 0.0;  // milliseconds, whole cycle including sensing
};

struct CycleTrace {
  int cycle = 0;
  double time = 0.0;
  Pose pose;
  int lnp_count = 0;
  int navigable = 0;
  int non_navigable = 0;
  int outside_fov = 0;
  bool no_viable = true;
  Lnp selected;  // meaningful only when no_viable is false
  MotionCommand command;
  bool stuck = false;
  CycleTiming timing;
};

enum class Outcome { Reached, Stuck, Timeout, OutOfBounds };
const char* to_string(Outcome o);

struct TrialSummary {
  Mode mode = Mode::G;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  bool no_viable_stall = false;  // ended because no LNP was viable for too long
  double path_length = 0.0;
  double max_velocity = 0.0;
  double duration = 0.0;
  double net_displacement = 0.0;
  double final_goal_distance = 0.0;
  int cycles = 0;
  int no_viable_cycles = 0;
  double mean_cycle_ms = 0.0;
  std::vector<RegionFlag> regions;

  [[nodiscard]] bool entered(const std::string& region) const;
};

struct TrialResult {
  TrialSummary summary;
  std::vector<CycleTrace> traces;
  std::vector<Pose> trajectory;  // spawn followed by the pose after every step
};

/// Runs one closed-loop trial. Deterministic in (cfg, world, mode, seed).
TrialResult run_trial(const ScenarioConfig& cfg, const World& world, Mode mode, std::uint64_t seed);
TrialResult run_trial(const ScenarioConfig& cfg, Mode mode, std::uint64_t seed);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation; 0 for a single trial
};
MeanStd mean_std(const std::vector<double>& values);

struct ModeReport {
  Mode mode = Mode::G;
  int trials = 0;
  int reached = 0;
  std::map<std::string, int> outcomes;
  MeanStd path_length;
  MeanStd max_velocity;
  MeanStd cycle_ms;
  std::map<std::string, double> avoidance;  // percent of trials never entering
  std::vector<TrialSummary> summaries;

  [[nodiscard]] double success_rate() const { return trials ? 100.0 * reached / trials : 0.0; }
};

struct SuiteReport {
  std::string scenario;
  std::vector<ModeReport> modes;

  [[nodiscard]] const ModeReport* find(Mode mode) const;
};

/// Runs cfg.trials trials (seeds cfg.seed, cfg.seed + 1, ...) for each mode.
/// With an output directory, writes trace_<mode>_<seed>.csv,
/// timing_<mode>_<seed>.csv and summary.json there.
SuiteReport run_suite(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {});

/// Trace CSV: a header line then one row per cycle. Wall-clock timings are
/// kept out of this file so it is reproducible byte for byte.
void emit_traces(const std::vector<CycleTrace>& traces, const std::filesystem::path& path);
void emit_timings(const std::vector<CycleTrace>& traces, const std::filesystem::path& path);
std::string trace_header();

/// JSON documents for a trial summary and a suite report.
std::string summary_json(const TrialSummary& s);
std::string report_json(const SuiteReport& r);

}  // namespace vgnav
