#include "vgnav/harness.hpp"

#include "vgnav/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace vgnav {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void GpSettings::validate(const std::string& name) const {
  if (num_inducing < 1) throw ConfigError(fmt::format("gp.{}.num_inducing must be >= 1", name));
  if (max_points < num_inducing) {
    throw ConfigError(fmt::format("gp.{}.max_points must be >= num_inducing", name));
  }
  if (iterations < 1) throw ConfigError(fmt::format("gp.{}.iterations must be >= 1", name));
  if (!initial_kernel.valid()) throw ConfigError(fmt::format("gp.{} initial kernel must be positive", name));
  if (!(noise_variance > 0.0)) throw ConfigError(fmt::format("gp.{}.noise_variance must be positive", name));
  if (!(length_scale_min > 0.0) || !(length_scale_max >= length_scale_min) ||
      initial_kernel.length_scale < length_scale_min || initial_kernel.length_scale > length_scale_max) {
    throw ConfigError(fmt::format("gp.{} length-scale bounds must bracket the initial length scale", name));
  }
  if (!(mixture_weight_min > 0.0) || !(mixture_weight_max >= mixture_weight_min) ||
      initial_kernel.mixture_weight < mixture_weight_min || initial_kernel.mixture_weight > mixture_weight_max) {
    throw ConfigError(fmt::format("gp.{} mixture-weight bounds must bracket the initial mixture weight", name));
  }
}

OptimSettings GpSettings::optim_settings(AzimuthMetric metric) const {
  OptimSettings opt;
  opt.max_iterations = iterations;
  opt.metric = metric;
  opt.optimize = {fit_signal_variance, fit_length_scale, fit_mixture_weight, fit_noise_variance};
  opt.lower_log[kLogLength] = std::log(length_scale_min);
  opt.upper_log[kLogLength] = std::log(length_scale_max);
  opt.lower_log[kLogMixture] = std::log(mixture_weight_min);
  opt.upper_log[kLogMixture] = std::log(mixture_weight_max);
  return opt;
}

void ScenarioConfig::validate() const {
  if (world_generator.empty()) {
    if (world_file.empty()) throw ConfigError("scenario names neither a world generator nor a world file");
    if (!std::filesystem::exists(world_file)) {
      throw ConfigError(fmt::format("world file '{}' does not exist", world_file.string()));
    }
  } else {
    const auto names = world_generator_names();
    if (std::find(names.begin(), names.end(), world_generator) == names.end()) {
      throw ConfigError(fmt::format("unknown world generator '{}'", world_generator));
    }
  }
  if (modes.empty()) throw ConfigError("scenario lists no planner modes");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (spawn_jitter_position < 0.0 || spawn_jitter_heading < 0.0) {
    throw ConfigError("spawn jitter must be non-negative");
  }
  planner.validate();
  lidar.validate(planner.surface_radius);
  camera.validate();
  geometry_gp.validate("geometry");
  depth_gp.validate("depth");
  nav_gp.validate("navigability");
  if (!(lattice.azimuth_resolution > 0.0) || !(lattice.elevation_resolution > 0.0)) {
    throw ConfigError("lattice resolutions must be positive");
  }
  if (!(limits.climb_limit > 0.0) || !(limits.max_linear > 0.0)) {
    throw ConfigError("kinematic limits must be positive");
  }
  const auto& t = termination;
  if (!(t.dt > 0.0) || !(t.goal_tolerance > 0.0) || !(t.stuck_timeout > 0.0) || !(t.max_time > 0.0) ||
      !(t.no_viable_timeout > 0.0)) {
    throw ConfigError("termination rules must be positive");
  }
}

World ScenarioConfig::build_world() const {
  World w = world_generator.empty() ? read_world(world_file) : make_world(world_generator);
  if (spawn) w.spawn = Pose(Vec3(spawn->position.x(), spawn->position.y(), w.height_at(spawn->xy())), spawn->heading);
  if (goal) w.goal = *goal;
  class_map.require(w.class_names);
  if (!w.in_bounds(w.spawn.xy())) throw ConfigError("spawn lies outside the world");
  return w;
}

namespace {

// Reads a JSON object while tracking which keys were used, so that typos in
// a config are reported instead of silently ignored.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("'{}' must be an object", path_));
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("'{}.{}': {}", path_, key, e.what()));
    }
  }
  void angle(const char* key, double& out_rad) {
    double deg = rad2deg(out_rad);
    get(key, deg);
    out_rad = deg2rad(deg);
  }
  [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }
  Section child(const char* key) {
    used_.insert(key);
    return Section(j_.at(key), path_ + "." + key);
  }
  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(fmt::format("unknown key '{}.{}'", path_, k));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_gp(Section s, GpSettings& g) {
  s.get("num_inducing", g.num_inducing);
  s.get("max_points", g.max_points);
  s.get("iterations", g.iterations);
  s.get("signal_variance", g.initial_kernel.signal_variance);
  s.get("length_scale", g.initial_kernel.length_scale);
  s.get("mixture_weight", g.initial_kernel.mixture_weight);
  s.get("noise_variance", g.noise_variance);
  s.get("length_scale_min", g.length_scale_min);
  s.get("length_scale_max", g.length_scale_max);
  s.get("mixture_weight_min", g.mixture_weight_min);
  s.get("mixture_weight_max", g.mixture_weight_max);
  s.get("fit_signal_variance", g.fit_signal_variance);
  s.get("fit_length_scale", g.fit_length_scale);
  s.get("fit_mixture_weight", g.fit_mixture_weight);
  s.get("fit_noise_variance", g.fit_noise_variance);
  s.get("warm_start", g.warm_start);
  s.finish();
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("invalid JSON: {}", e.what()));
  }
  ScenarioConfig cfg;
  Section top(root, "config");
  top.get("name", cfg.name);
  if (top.has("world")) {
    Section w = top.child("world");
    w.get("generator", cfg.world_generator);
    std::string file;
    w.get("file", file);
    if (!file.empty()) {
      cfg.world_file = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : base_dir / file;
    }
    w.finish();
  }
  if (top.has("spawn")) {
    Section s = top.child("spawn");
    double x = 0, y = 0, h = 0;
    s.get("x", x);
    s.get("y", y);
    s.angle("heading_deg", h);
    s.finish();
    cfg.spawn = Pose(Vec3(x, y, 0.0), h);
  }
  if (top.has("goal")) {
    Section s = top.child("goal");
    double x = 0, y = 0;
    s.get("x", x);
    s.get("y", y);
    s.finish();
    cfg.goal = Vec2(x, y);
  }
  if (top.has("spawn_jitter")) {
    Section s = top.child("spawn_jitter");
    s.get("position", cfg.spawn_jitter_position);
    s.angle("heading_deg", cfg.spawn_jitter_heading);
    s.finish();
  }
  if (top.has("modes")) {
    std::vector<std::string> names;
    top.get("modes", names);
    cfg.modes.clear();
    for (const auto& n : names) cfg.modes.push_back(parse_mode(n));
  }
  top.get("trials", cfg.trials);
  top.get("seed", cfg.seed);
  if (top.has("class_map")) top.get("class_map", cfg.class_map.navigable);
  if (top.has("planner")) {
    Section p = top.child("planner");
    PlannerConfig& c = cfg.planner;
    p.get("surface_radius", c.surface_radius);
    p.get("visual_radius", c.visual_radius);
    p.get("depth_cutoff", c.depth_cutoff);
    p.get("free_variance_threshold", c.free_variance_threshold);
    p.get("depth_variance_threshold", c.depth_variance_threshold);
    p.get("nav_threshold", c.nav_threshold);
    p.get("nav_support_variance", c.nav_support_variance);
    p.get("nav_path_check", c.nav_path_check);
    p.angle("nav_path_step_deg", c.nav_path_step);
    p.angle("nav_path_margin_deg", c.nav_path_margin);
    p.get("goal_capture_radius", c.goal_capture_radius);
    p.angle("goal_capture_sector_deg", c.goal_capture_sector);
    p.angle("elevation_min_deg", c.elevation_min);
    p.angle("elevation_max_deg", c.elevation_max);
    p.get("k_dst", c.k_dst);
    p.get("k_dir", c.k_dir);
    p.get("k_elv", c.k_elv);
    p.get("k_nav", c.k_nav);
    p.get("k_a", c.k_a);
    p.get("k_b", c.k_b);
    p.get("k_c", c.k_c);
    p.get("v_max", c.v_max);
    if (p.has("reference_distance")) {
      p.get("reference_distance", c.reference_distance);
      cfg.auto_reference_distance = false;
    }
    p.finish();
  }
  if (top.has("lidar")) {
    Section s = top.child("lidar");
    s.get("channels", cfg.lidar.channels);
    s.angle("elevation_min_deg", cfg.lidar.elevation_min);
    s.angle("elevation_max_deg", cfg.lidar.elevation_max);
    s.angle("azimuth_step_deg", cfg.lidar.azimuth_step);
    s.get("max_range", cfg.lidar.max_range);
    s.get("noise_sigma", cfg.lidar.noise_sigma);
    s.get("mount_height", cfg.lidar.mount_height);
    s.finish();
  }
  if (top.has("camera")) {
    Section s = top.child("camera");
    s.get("width", cfg.camera.width);
    s.get("height", cfg.camera.height);
    s.angle("horizontal_fov_deg", cfg.camera.horizontal_fov);
    s.angle("vertical_fov_deg", cfg.camera.vertical_fov);
    s.get("max_range", cfg.camera.max_range);
    s.get("label_noise", cfg.camera.label_noise);
    if (s.has("offset")) {
      std::vector<double> o;
      s.get("offset", o);
      if (o.size() != 3) throw ConfigError("'config.camera.offset' must have three entries");
      cfg.camera.offset = Vec3(o[0], o[1], o[2]);
    }
    s.finish();
  }
  if (top.has("kinematics")) {
    Section s = top.child("kinematics");
    s.angle("climb_limit_deg", cfg.limits.climb_limit);
    s.get("max_linear", cfg.limits.max_linear);
    s.finish();
  }
  if (top.has("gp")) {
    Section s = top.child("gp");
    if (s.has("geometry")) read_gp(s.child("geometry"), cfg.geometry_gp);
    if (s.has("depth")) read_gp(s.child("depth"), cfg.depth_gp);
    if (s.has("navigability")) read_gp(s.child("navigability"), cfg.nav_gp);
    s.finish();
  }
  if (top.has("lattice")) {
    Section s = top.child("lattice");
    s.angle("azimuth_resolution_deg", cfg.lattice.azimuth_resolution);
    s.angle("elevation_resolution_deg", cfg.lattice.elevation_resolution);
    if (s.has("elevation_min_deg")) {
      double v = 0;
      s.angle("elevation_min_deg", v);
      cfg.lattice.elevation_min = v;
    }
    if (s.has("elevation_max_deg")) {
      double v = 0;
      s.angle("elevation_max_deg", v);
      cfg.lattice.elevation_max = v;
    }
    s.finish();
  }
  if (top.has("termination")) {
    Section s = top.child("termination");
    s.get("dt", cfg.termination.dt);
    s.get("goal_tolerance", cfg.termination.goal_tolerance);
    s.get("stuck_timeout", cfg.termination.stuck_timeout);
    s.get("max_time", cfg.termination.max_time);
    s.get("no_viable_timeout", cfg.termination.no_viable_timeout);
    s.finish();
  }
  if (top.has("recovery")) {
    std::map<std::string, bool> rec;
    top.get("recovery", rec);
    for (const auto& [k, v] : rec) cfg.recovery[parse_mode(k)] = v;
  }
  top.finish();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---------------------------------------------------------------------------
// Trial loop

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Reached: return "reached";
    case Outcome::Stuck: return "stuck";
    case Outcome::Timeout: return "timeout";
    case Outcome::OutOfBounds: return "out_of_bounds";
  }
  return "?";
}

bool TrialSummary::entered(const std::string& region) const {
  for (const auto& r : regions) {
    if (r.name == region) return r.entered;
  }
  return false;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t cycle) {
  return splitmix(splitmix(splitmix(seed) ^ stream) ^ cycle);
}

enum Stream : std::uint64_t { kSpawn = 1, kLidar = 2, kCamera = 3 };

TrainingSet thin(const TrainingSet& t, int max_points) {
  const Eigen::Index n = t.size();
  if (n <= max_points) return t;
  TrainingSet out;
  out.noise_variance = t.noise_variance;
  out.inputs.resize(max_points, 2);
  out.targets.resize(max_points);
  for (Eigen::Index i = 0; i < max_points; ++i) {
    const Eigen::Index k = i * n / max_points;
    out.inputs.row(i) = t.inputs.row(k);
    out.targets(i) = t.targets(k);
  }
  return out;
}

// Fits one model per cycle, seeding from the previous cycle when enabled.
class WarmModel {
 public:
  WarmModel(const GpSettings& s, AzimuthMetric metric) : s_(s), metric_(metric), kernel_(s.initial_kernel), noise_(s.noise_variance) {}

  SgpModel fit(TrainingSet train) {
    train = thin(train, s_.max_points);
    const OptimSettings opt = s_.optim_settings(metric_);
    const int m = std::min<int>(s_.num_inducing, static_cast<int>(train.size()));
    train.noise_variance = noise_;
    SgpModel model;
    try {
      model = fit_svgp(train, kernel_, m, opt);
    } catch (const NumericalFailure&) {
      train.noise_variance = s_.noise_variance;
      model = fit_svgp(train, s_.initial_kernel, m, opt);
    }
    if (s_.warm_start) {
      kernel_ = model.kernel;
      noise_ = model.noise_variance;
    }
    return model;
  }

 private:
  GpSettings s_;
  AzimuthMetric metric_;
  RqKernelParams kernel_;
  double noise_;
};

Lattice elevation_rows(const ScenarioConfig& cfg, double az_min, double az_span, bool full_circle) {
  const double el_min = cfg.lattice.elevation_min.value_or(cfg.planner.elevation_min);
  const double el_max = cfg.lattice.elevation_max.value_or(cfg.planner.elevation_max);
  const double res = cfg.lattice.elevation_resolution;
  const int rows = std::max(1, static_cast<int>(std::floor((el_max - el_min) / res + 1e-9)) + 1);
  const double az_res = cfg.lattice.azimuth_resolution;
  if (full_circle) {
    const int cols = std::max(1, static_cast<int>(std::lround(2.0 * kPi / az_res)));
    return Lattice::uniform(-kPi, 2.0 * kPi / cols, cols, el_min, res, rows);
  }
  const int cols = std::max(1, static_cast<int>(std::floor(az_span / az_res + 1e-9)) + 1);
  const double step = cols > 1 ? az_span / (cols - 1) : 0.0;
  return Lattice::uniform(az_min, step, cols, el_min, res, rows);
}

VarianceSurface empty_surface(const Lattice& lattice) {
  VarianceSurface vs;
  vs.lattice = lattice;
  vs.mean.assign(lattice.size(), 0.0);
  vs.variance.assign(lattice.size(), std::numeric_limits<double>::infinity());
  return vs;
}

void count_categories(CycleTrace& tr, const std::vector<Lnp>& lnps) {
  tr.lnp_count = static_cast<int>(lnps.size());
  for (const Lnp& l : lnps) {
    switch (l.navigability) {
      case Navigability::Navigable: ++tr.navigable; break;
      case Navigability::NonNavigable: ++tr.non_navigable; break;
      case Navigability::OutsideFov: ++tr.outside_fov; break;
    }
  }
}

}  // namespace

SgpModel fit_settings(TrainingSet train, const GpSettings& settings, AzimuthMetric metric) {
  train = thin(train, settings.max_points);
  train.noise_variance = settings.noise_variance;
  const int m = std::min<int>(settings.num_inducing, static_cast<int>(train.size()));
  return fit_svgp(train, settings.initial_kernel, m, settings.optim_settings(metric));
}

TrialResult run_trial(const ScenarioConfig& cfg, Mode mode, std::uint64_t seed) {
  cfg.validate();
  return run_trial(cfg, cfg.build_world(), mode, seed);
}

TrialResult run_trial(const ScenarioConfig& cfg, const World& world, Mode mode, std::uint64_t seed) {
  cfg.validate();
  cfg.class_map.require(world.class_names);

  PlannerConfig planner = cfg.planner;
  if (cfg.auto_reference_distance) {
    planner.reference_distance = std::max(1.0, (world.goal - world.spawn.xy()).norm());
  }
  const TerminationRules& term = cfg.termination;
  const bool use_lidar = mode != Mode::V;
  const bool use_camera = mode != Mode::G;
  const bool recovery = cfg.recovery.count(mode) ? cfg.recovery.at(mode) : false;

  RobotState state;
  {
    NormalStream jitter(stream_seed(seed, kSpawn, 0));
    const double dx = cfg.spawn_jitter_position * jitter.next();
    const double dy = cfg.spawn_jitter_position * jitter.next();
    const double dh = cfg.spawn_jitter_heading * jitter.next();
    const Vec2 xy = world.spawn.xy() + Vec2(dx, dy);
    state.pose = Pose(Vec3(xy.x(), xy.y(), world.height_at(xy)), wrap_angle(world.spawn.heading + dh));
  }

  const AngularSpan fov = cfg.camera.fov();
  const Lattice g_lattice = elevation_rows(cfg, -kPi, 2.0 * kPi, true);
  const Lattice v_lattice = elevation_rows(cfg, fov.azimuth_min, fov.azimuth_max - fov.azimuth_min, false);
  WarmModel g_model(cfg.geometry_gp, AzimuthMetric::Periodic);
  WarmModel d_model(cfg.depth_gp, AzimuthMetric::Planar);
  WarmModel n_model(cfg.nav_gp, AzimuthMetric::Planar);

  TrialResult result;
  TrialSummary& sum = result.summary;
  sum.mode = mode;
  sum.seed = seed;
  result.trajectory.push_back(state.pose);
  const Vec2 start = state.pose.xy();

  double stuck_time = 0.0;
  double no_viable_time = 0.0;
  double total_ms = 0.0;
  const int max_cycles = static_cast<int>(std::ceil(term.max_time / term.dt - 1e-9));
  std::optional<Outcome> outcome;

  for (int cycle = 0; !outcome; ++cycle) {
    if ((state.pose.xy() - world.goal).norm() <= term.goal_tolerance) {
      outcome = Outcome::Reached;
      break;
    }
    if (cycle >= max_cycles) {
      outcome = Outcome::Timeout;
      break;
    }
    const auto t_cycle = Clock::now();
    CycleTrace tr;
    tr.cycle = cycle;
    tr.time = cycle * term.dt;
    tr.pose = state.pose;
    tr.stuck = state.stuck;
    const Pose sensor = sensor_pose(state, cfg.lidar.mount_height);

    std::vector<Lnp> lnps;
    if (use_lidar) {
      const auto cloud = simulate_lidar(world, state, cfg.lidar, stream_seed(seed, kLidar, static_cast<std::uint64_t>(cycle)));
      const OccupancySurface surf = build_occupancy_surface(cloud, planner.surface_radius);
      VarianceSurface vs;
      if (surf.points.empty()) {
        vs = empty_surface(g_lattice);
      } else {
        auto t0 = Clock::now();
        const SgpModel model = g_model.fit(surf.training_set(cfg.geometry_gp.noise_variance));
        tr.timing.fit_g = ms_since(t0);
        t0 = Clock::now();
        vs = variance_surface(model, g_lattice);
        tr.timing.predict_g = ms_since(t0);
      }
      lnps = extract_g_lnps(vs, planner, sensor);
    }

    if (use_camera) {
      const Pose cam = camera_pose(state, cfg.lidar, cfg.camera);
      const DepthClassImage img =
          segment_oracle(world, cam, cfg.camera, stream_seed(seed, kCamera, static_cast<std::uint64_t>(cycle)));
      const NavigabilityCloud nav_cloud = project_navigability(navigability_image(img, cfg.class_map), img, cfg.camera);
      const VisualSurface vsurf = build_visual_surface(nav_cloud, planner.visual_radius, fov);
      const VisualDatasets data = split_visual_datasets(vsurf, planner.depth_cutoff, cfg.nav_gp.noise_variance,
                                                        cfg.depth_gp.noise_variance);
      auto t0 = Clock::now();
      std::optional<SgpModel> nav_model;
      if (data.navigability.size() > 0) nav_model = n_model.fit(data.navigability);
      std::optional<SgpModel> depth_model;
      if (mode == Mode::V && data.depth.size() > 0) depth_model = d_model.fit(data.depth);
      tr.timing.fit_v = ms_since(t0);

      t0 = Clock::now();
      if (mode == Mode::V) {
        lnps = depth_model ? extract_v_lnps(variance_surface(*depth_model, v_lattice), planner, sensor)
                           : std::vector<Lnp>{};
      }
      if (nav_model) {
        lnps = assess_navigability(std::move(lnps), *nav_model, depth_model ? &*depth_model : nullptr, fov, planner);
      } else {
        for (Lnp& l : lnps) l.navigability = Navigability::OutsideFov;
      }
      tr.timing.predict_v = ms_since(t0);
    }

    count_categories(tr, lnps);
    const auto chosen =
        capture_goal(lnps, select_lnp(lnps, world.goal, mode, planner), sensor, world.goal, mode, planner);
    MotionCommand cmd;
    if (chosen) {
      tr.no_viable = false;
      tr.selected = *chosen;
      cmd = motion_command(*chosen, planner);
    } else if (recovery) {
      cmd = recovery_command(planner);
    }
    tr.command = cmd;

    const StepResult step = step_robot(state, cmd, term.dt, world, cfg.limits);
    tr.timing.total = ms_since(t_cycle);
    total_ms += tr.timing.total;
    result.traces.push_back(tr);
    ++sum.cycles;
    if (tr.no_viable) ++sum.no_viable_cycles;

    if (step.out_of_bounds) {
      outcome = Outcome::OutOfBounds;
      break;
    }
    sum.path_length += (step.state.pose.xy() - state.pose.xy()).norm();
    sum.max_velocity = std::max(sum.max_velocity, step.state.linear_vel);
    state = step.state;
    result.trajectory.push_back(state.pose);

    if (state.stuck) {
      stuck_time += term.dt;
      if (stuck_time > term.stuck_timeout + 1e-9) outcome = Outcome::Stuck;
    }
    no_viable_time = tr.no_viable ? no_viable_time + term.dt : 0.0;
    if (!outcome && no_viable_time >= term.no_viable_timeout - 1e-9) {
      outcome = Outcome::Stuck;
      sum.no_viable_stall = true;
    }
  }

  sum.outcome = *outcome;
  sum.duration = sum.cycles * term.dt;
  sum.net_displacement = (state.pose.xy() - start).norm();
  sum.final_goal_distance = (state.pose.xy() - world.goal).norm();
  sum.mean_cycle_ms = sum.cycles ? total_ms / sum.cycles : 0.0;
  sum.regions = region_events(result.trajectory, world);
  return result;
}

// ---------------------------------------------------------------------------
// Suites and output

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(v.size()));
  return r;
}

const ModeReport* SuiteReport::find(Mode mode) const {
  for (const auto& m : modes) {
    if (m.mode == mode) return &m;
  }
  return nullptr;
}

SuiteReport run_suite(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const World world = cfg.build_world();
  if (out_dir) std::filesystem::create_directories(*out_dir);
  SuiteReport report;
  report.scenario = cfg.name;
  for (Mode mode : cfg.modes) {
    ModeReport mr;
    mr.mode = mode;
    std::vector<double> paths, vels, cycle_ms;
    std::map<std::string, int> avoided;
    for (const auto& r : world.regions) avoided[r.name] = 0;
    for (int i = 0; i < cfg.trials; ++i) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
      TrialResult tr = run_trial(cfg, world, mode, seed);
      if (out_dir) {
        const std::string tag = fmt::format("{}_{}", to_string(mode), seed);
        emit_traces(tr.traces, *out_dir / fmt::format("trace_{}.csv", tag));
        emit_timings(tr.traces, *out_dir / fmt::format("timing_{}.csv", tag));
      }
      const TrialSummary& s = tr.summary;
      ++mr.trials;
      if (s.outcome == Outcome::Reached) ++mr.reached;
      ++mr.outcomes[to_string(s.outcome)];
      paths.push_back(s.path_length);
      vels.push_back(s.max_velocity);
      cycle_ms.push_back(s.mean_cycle_ms);
      for (const auto& f : s.regions) {
        if (!f.entered) ++avoided[f.name];
      }
      mr.summaries.push_back(s);
    }
    mr.path_length = mean_std(paths);
    mr.max_velocity = mean_std(vels);
    mr.cycle_ms = mean_std(cycle_ms);
    for (const auto& [name, count] : avoided) mr.avoidance[name] = 100.0 * count / mr.trials;
    report.modes.push_back(std::move(mr));
  }
  if (out_dir) {
    const auto path = *out_dir / "summary.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    out << report_json(report) << '\n';
  }
  return report;
}

std::string trace_header() {
  return "cycle,time,x,y,z,heading,lnp_count,navigable,non_navigable,outside_fov,no_viable,"
         "sel_azimuth,sel_elevation,sel_range,sel_cost,cmd_linear,cmd_angular,stuck";
}

namespace {

fmt::ostream open_output(const std::filesystem::path& path) {
  try {
    return fmt::output_file(path.string());
  } catch (const std::system_error& e) {
    throw std::runtime_error(fmt::format("cannot write '{}': {}", path.string(), e.code().message()));
  }
}

}  // namespace

void emit_traces(const std::vector<CycleTrace>& traces, const std::filesystem::path& path) {
  auto out = open_output(path);
  out.print("{}\n", trace_header());
  for (const auto& t : traces) {
    const Lnp& s = t.selected;
    const bool sel = !t.no_viable;
    out.print("{},{:.1f},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n",
              t.cycle, t.time, t.pose.position.x(), t.pose.position.y(), t.pose.position.z(), t.pose.heading,
              t.lnp_count, t.navigable, t.non_navigable, t.outside_fov, t.no_viable ? 1 : 0,
              sel ? s.azimuth : 0.0, sel ? s.elevation : 0.0, sel ? s.range : 0.0, sel ? s.cost : 0.0,
              t.command.linear, t.command.angular, t.stuck ? 1 : 0);
  }
}

void emit_timings(const std::vector<CycleTrace>& traces, const std::filesystem::path& path) {
  auto out = open_output(path);
  out.print("cycle,fit_g_ms,predict_g_ms,fit_v_ms,predict_v_ms,total_ms\n");
  for (const auto& t : traces) {
    out.print("{},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f}\n", t.cycle, t.timing.fit_g, t.timing.predict_g,
              t.timing.fit_v, t.timing.predict_v, t.timing.total);
  }
}

namespace {

json summary_to_json(const TrialSummary& s) {
  json regions = json::object();
  for (const auto& r : s.regions) regions[r.name] = r.entered;
  return {{"mode", to_string(s.mode)},
          {"seed", s.seed},
          {"outcome", to_string(s.outcome)},
          {"no_viable_stall", s.no_viable_stall},
          {"path_length", s.path_length},
          {"max_velocity", s.max_velocity},
          {"duration", s.duration},
          {"net_displacement", s.net_displacement},
          {"final_goal_distance", s.final_goal_distance},
          {"cycles", s.cycles},
          {"no_viable_cycles", s.no_viable_cycles},
          {"mean_cycle_ms", s.mean_cycle_ms},
          {"entered", regions}};
}

}  // namespace

std::string summary_json(const TrialSummary& s) { return summary_to_json(s).dump(2); }

std::string report_json(const SuiteReport& r) {
  json modes = json::array();
  for (const auto& m : r.modes) {
    json trials = json::array();
    for (const auto& s : m.summaries) trials.push_back(summary_to_json(s));
    modes.push_back({{"mode", to_string(m.mode)},
                     {"trials", m.trials},
                     {"success_rate", m.success_rate()},
                     {"outcomes", m.outcomes},
                     {"path_length", {{"mean", m.path_length.mean}, {"std", m.path_length.std}}},
                     {"max_velocity", {{"mean", m.max_velocity.mean}, {"std", m.max_velocity.std}}},
                     {"cycle_ms", {{"mean", m.cycle_ms.mean}, {"std", m.cycle_ms.std}}},
                     {"avoidance_percent", m.avoidance},
                     {"per_trial", trials}});
  }
  return json{{"scenario", r.scenario}, {"modes", modes}}.dump(2);
}

}  // namespace vgnav
