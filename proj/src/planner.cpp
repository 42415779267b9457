#include "vgnav/planner.hpp"

#include "vgnav/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vgnav {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::G: return "G";
    case Mode::V: return "V";
    case Mode::VG: return "VG";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  std::string up;
  for (char c : text) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "G") return Mode::G;
  if (up == "V") return Mode::V;
  if (up == "VG") return Mode::VG;
  throw ConfigError(fmt::format("unknown planner mode '{}' (expected G, V or VG)", text));
}

const char* to_string(Navigability n) {
  switch (n) {
    case Navigability::Navigable: return "navigable";
    case Navigability::NonNavigable: return "non_navigable";
    case Navigability::OutsideFov: return "outside_fov";
  }
  return "?";
}

void PlannerConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("planner.{} must be positive", name));
  };
  positive(surface_radius, "surface_radius");
  positive(visual_radius, "visual_radius");
  positive(depth_cutoff, "depth_cutoff");
  positive(free_variance_threshold, "free_variance_threshold");
  positive(depth_variance_threshold, "depth_variance_threshold");
  positive(nav_support_variance, "nav_support_variance");
  positive(nav_path_step, "nav_path_step");
  positive(k_a, "k_a");
  positive(k_b, "k_b");
  positive(k_c, "k_c");
  positive(v_max, "v_max");
  positive(reference_distance, "reference_distance");
  if (nav_path_margin < 0.0 || goal_capture_radius < 0.0 || goal_capture_sector < 0.0) {
    throw ConfigError("planner path margin and goal-capture settings must be non-negative");
  }
  if (!(elevation_min < elevation_max)) throw ConfigError("planner elevation bounds are inverted");
  if (k_dst < 0.0 || k_dir < 0.0 || k_elv < 0.0 || !(k_dst + k_dir + k_elv > 0.0)) {
    throw ConfigError("planner cost weights must be non-negative with a positive sum");
  }
  if (!(k_nav >= 0.5 && k_nav <= 1.0)) throw ConfigError("planner.k_nav must be in [0.5, 1]");
  if (!(nav_threshold >= 0.0 && nav_threshold <= 1.0)) {
    throw ConfigError("planner.nav_threshold must be in [0, 1]");
  }
}

namespace {

bool inside_bounds(double el, const PlannerConfig& cfg) {
  return el > cfg.elevation_min && el < cfg.elevation_max;
}

Lnp make_lnp(double az, double el, double range, const Pose& sensor) {
  Lnp l;
  l.azimuth = az;
  l.elevation = el;
  l.range = range;
  l.world_xyz = sensor.to_world(spherical_to_cartesian({az, el, range}));
  return l;
}

}  // namespace

std::vector<Lnp> extract_g_lnps(const VarianceSurface& occ, const PlannerConfig& cfg, const Pose& sensor) {
  const Lattice& lat = occ.lattice;
  std::vector<Lnp> out;
  for (std::size_t c = 0; c < lat.cols(); ++c) {
    for (std::size_t r = 0; r < lat.rows(); ++r) {
      const double el = lat.elevations[r];
      if (!inside_bounds(el, cfg)) continue;
      const std::size_t k = lat.index(r, c);
      if (occ.variance[k] > cfg.free_variance_threshold) {
        const double range = std::clamp(cfg.surface_radius - occ.mean[k], 0.0, cfg.surface_radius);
        out.push_back(make_lnp(lat.azimuths[c], el, range, sensor));
        break;
      }
    }
  }
  return out;
}

std::vector<Lnp> extract_v_lnps(const VarianceSurface& depth, const PlannerConfig& cfg, const Pose& sensor) {
  const Lattice& lat = depth.lattice;
  std::vector<Lnp> out;
  for (std::size_t c = 0; c < lat.cols(); ++c) {
    for (std::size_t r = lat.rows(); r-- > 0;) {
      const double el = lat.elevations[r];
      if (!inside_bounds(el, cfg)) continue;
      const std::size_t k = lat.index(r, c);
      const double range = cfg.visual_radius - depth.mean[k];
      if (depth.variance[k] < cfg.depth_variance_threshold && range <= cfg.depth_cutoff) {
        out.push_back(make_lnp(lat.azimuths[c], el, std::clamp(range, 0.0, cfg.visual_radius), sensor));
        break;
      }
    }
  }
  return out;
}

std::vector<Lnp> assess_navigability(std::vector<Lnp> lnps, const SgpModel& nav_model,
                                     const SgpModel* depth_model, const AngularSpan& fov,
                                     const PlannerConfig& cfg) {
  // Gather every query of every in-FoV candidate so the models are
  // evaluated in one batch.
  std::vector<std::size_t> first(lnps.size() + 1, 0);
  std::vector<Eigen::Vector2d> queries;
  for (std::size_t i = 0; i < lnps.size(); ++i) {
    first[i] = queries.size();
    const Lnp& l = lnps[i];
    if (!fov.contains(l.azimuth, l.elevation)) continue;
    queries.emplace_back(l.azimuth, l.elevation);
    if (cfg.nav_path_check) {
      for (const double da : {0.0, -cfg.nav_path_margin, cfg.nav_path_margin}) {
        if (da != 0.0 && cfg.nav_path_margin <= 0.0) continue;
        const double az = l.azimuth + da;
        if (az < fov.azimuth_min || az > fov.azimuth_max) continue;
        const double top = da == 0.0 ? l.elevation - cfg.nav_path_step : l.elevation;
        for (double el = top; el >= fov.elevation_min; el -= cfg.nav_path_step) queries.emplace_back(az, el);
      }
    }
  }
  first[lnps.size()] = queries.size();
  Inputs q(static_cast<Eigen::Index>(queries.size()), 2);
  for (std::size_t k = 0; k < queries.size(); ++k) q.row(static_cast<Eigen::Index>(k)) = queries[k].transpose();
  const auto nav = nav_model.predict(q);

  std::vector<Lnp> out;
  out.reserve(lnps.size());
  for (std::size_t i = 0; i < lnps.size(); ++i) {
    Lnp l = lnps[i];
    if (first[i] == first[i + 1]) {
      l.navigability = Navigability::OutsideFov;
      out.push_back(l);
      continue;
    }
    if (depth_model && depth_model->predict(Eigen::Vector2d(l.azimuth, l.elevation)).variance >=
                           cfg.depth_variance_threshold) {
      continue;
    }
    bool observed = false;
    bool blocked = false;
    for (std::size_t k = first[i]; k < first[i + 1]; ++k) {
      if (nav[k].variance >= cfg.nav_support_variance) continue;
      observed = true;
      if (!(nav[k].mean > cfg.nav_threshold)) blocked = true;
    }
    if (!observed) {
      l.navigability = Navigability::OutsideFov;
    } else {
      l.navigability = blocked ? Navigability::NonNavigable : Navigability::Navigable;
    }
    out.push_back(l);
  }
  return out;
}

double goal_cost(const Lnp& lnp, const Vec2& goal, const PlannerConfig& cfg) {
  const double d_tg = lnp.range + (goal - lnp.world_xyz.head<2>()).norm();
  const double beta_scale = std::max(std::abs(cfg.elevation_min), std::abs(cfg.elevation_max));
  const double dst = std::clamp(d_tg / (cfg.surface_radius + cfg.reference_distance), 0.0, 1.0);
  const double dir = std::clamp(std::abs(lnp.azimuth) / kPi, 0.0, 1.0);
  const double elv = beta_scale > 0.0 ? std::clamp(std::abs(lnp.elevation) / beta_scale, 0.0, 1.0) : 0.0;
  const double total = cfg.k_dst + cfg.k_dir + cfg.k_elv;
  return (cfg.k_dst * dst + cfg.k_dir * dir + cfg.k_elv * elv) / total;
}

std::optional<double> mode_cost(const Lnp& lnp, const Vec2& goal, Mode mode, const PlannerConfig& cfg) {
  const double cg = goal_cost(lnp, goal, cfg);
  switch (mode) {
    case Mode::G:
      return cg;
    case Mode::V:
      if (lnp.navigability == Navigability::OutsideFov) return std::nullopt;
      return lnp.navigability == Navigability::Navigable ? cg : 1.0;
    case Mode::VG:
      switch (lnp.navigability) {
        case Navigability::Navigable: return (1.0 - cfg.k_nav) * cg;
        case Navigability::NonNavigable: return 1.0;
        case Navigability::OutsideFov: return cfg.k_nav * cg;
      }
  }
  return std::nullopt;
}

std::optional<Lnp> select_lnp(const std::vector<Lnp>& lnps, const Vec2& goal, Mode mode,
                              const PlannerConfig& cfg) {
  std::optional<Lnp> best;
  for (const Lnp& l : lnps) {
    const auto cost = mode_cost(l, goal, mode, cfg);
    if (!cost || !(*cost < 1.0)) continue;
    bool better = !best || *cost < best->cost;
    if (best && *cost == best->cost) {
      const double a = std::abs(l.azimuth), b = std::abs(best->azimuth);
      better = a < b || (a == b && l.azimuth < best->azimuth);
    }
    if (better) {
      best = l;
      best->cost = *cost;
    }
  }
  return best;
}

std::optional<Lnp> capture_goal(const std::vector<Lnp>& lnps, std::optional<Lnp> selected,
                                const Pose& sensor, const Vec2& goal, Mode mode,
                                const PlannerConfig& cfg) {
  if (!(cfg.goal_capture_radius > 0.0)) return selected;
  const Vec2 to_goal = goal - sensor.xy();
  const double dist = to_goal.norm();
  if (dist > cfg.goal_capture_radius) return selected;
  const double bearing = wrap_angle(std::atan2(to_goal.y(), to_goal.x()) - sensor.heading);
  const Lnp* match = nullptr;
  for (const Lnp& l : lnps) {
    const double off = std::abs(wrap_angle(l.azimuth - bearing));
    if (off <= cfg.goal_capture_sector && (!match || off < std::abs(wrap_angle(match->azimuth - bearing)))) {
      match = &l;
    }
  }
  if (!match || match->range < dist) return selected;
  const auto cost = mode_cost(*match, goal, mode, cfg);
  if (!cost || !(*cost < 1.0)) return selected;
  Lnp l = *match;
  l.azimuth = bearing;
  l.world_xyz = Vec3(goal.x(), goal.y(), match->world_xyz.z());
  l.cost = *cost;
  return l;
}

MotionCommand motion_command(const Lnp& selected, const PlannerConfig& cfg) {
  const double rho = std::min(selected.range, cfg.surface_radius);
  return {std::clamp(cfg.k_a * rho - cfg.k_b * std::abs(selected.azimuth), 0.0, cfg.v_max),
          cfg.k_c * selected.azimuth};
}

MotionCommand recovery_command(const PlannerConfig& cfg) { return {0.0, cfg.k_c * kPi / 2}; }

}  // namespace vgnav
