#pragma once

// Local navigation points (LNPs) and goal-directed selection.
//
// G-LNPs come from the LiDAR variance surface (lowest free node per azimuth
// column), V-LNPs from the camera depth model (highest certain node per
// column). The navigability model then labels each candidate, and the
// selection cost depends on the planner mode:
//   G   go-to-goal cost only,
//   V   go-to-goal cost with non-navigable candidates masked to 1, in-FoV only,
//   VG  navigable (1-k_nav) C, non-navigable 1, outside the camera k_nav C.

#include "vgnav/geometry.hpp"
#include "vgnav/gp_core.hpp"
#include "vgnav/surfaces.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vgnav {

enum class Mode { G, V, VG };

std::string to_string(Mode mode);
/// Accepts "G", "V", "VG" (case-insensitive). Throws ConfigError otherwise.
Mode parse_mode(const std::string& text);

struct PlannerConfig {
  double surface_radius = 20.0;           // rho_g
  double visual_radius = 20.0;            // rho_v
  double depth_cutoff = 8.0;              // rho_d
  double free_variance_threshold = 1.0;   // V_g_th, absolute
  double depth_variance_threshold = 0.5;  // V_d_th, absolute
  double nav_threshold = 0.5;             // Omega_v_th
  // Nodes whose navigability variance is below this count as observed by
  // the camera.
  double nav_support_variance = 0.2;
  // Also require the ground between the robot and the LNP (the same column
  // from the bottom of the camera view upwards) to be navigable.
  bool nav_path_check = true;
  double nav_path_step = deg2rad(1.0);
  // Columns this far either side of a candidate are checked as well, which
  // keeps the chosen path clear of non-navigable ground by a small margin.
  double nav_path_margin = 0.0;
  double elevation_min = deg2rad(-15.0);  // beta_min_s, exclusive
  double elevation_max = deg2rad(0.5);    // beta_max_s, exclusive
  double k_dst = 0.6;
  double k_dir = 0.3;
  double k_elv = 0.1;
  double k_nav = 0.5;
  double k_a = 0.1;
  double k_b = 0.5;
  double k_c = 0.5;
  double v_max = 1.2;
  // Straight-line start-goal distance; scales the distance term.
  double reference_distance = 20.0;
  // Within this distance of the goal the robot steers at the goal itself
  // when the candidate in the goal's direction is viable and reaches past
  // it. Zero disables the rule.
  double goal_capture_radius = 0.0;
  double goal_capture_sector = deg2rad(5.0);

  void validate() const;
};

enum class Navigability { Navigable, NonNavigable, OutsideFov };
const char* to_string(Navigability n);

struct Lnp {
  double azimuth = 0.0;    // relative to the robot heading
  double elevation = 0.0;
  double range = 0.0;      // predicted, rho_g - Omega_hat
  Vec3 world_xyz = Vec3::Zero();
  Navigability navigability = Navigability::OutsideFov;
  double cost = 0.0;
};

/// Lowest free node of each azimuth column strictly inside the elevation
/// bounds. `occupancy` holds the G-SGP mean and variance on a lattice;
/// `sensor` is the robot frame (LiDAR centre) in the world.
std::vector<Lnp> extract_g_lnps(const VarianceSurface& occupancy, const PlannerConfig& cfg,
                                const Pose& sensor);

/// Highest certain node (variance below V_d_th, predicted range at most
/// rho_d) of each column strictly inside the elevation bounds, from the
/// depth model evaluated over the camera field of view.
std::vector<Lnp> extract_v_lnps(const VarianceSurface& depth, const PlannerConfig& cfg,
                                const Pose& sensor);

/// Labels each LNP with the navigability model. Candidates outside `fov`
/// are marked OutsideFov. When `depth_model` is given, candidates whose depth
/// variance is at least V_d_th are dropped.
std::vector<Lnp> assess_navigability(std::vector<Lnp> lnps, const SgpModel& nav_model,
                                     const SgpModel* depth_model, const AngularSpan& fov,
                                     const PlannerConfig& cfg);

/// Weighted go-to-goal cost in [0, 1]. Each term is normalised to [0, 1]
/// and the weights are divided by their sum.
double goal_cost(const Lnp& lnp, const Vec2& goal, const PlannerConfig& cfg);

/// Mode-dependent cost; nullopt when the candidate is not eligible (outside
/// the camera in V mode).
std::optional<double> mode_cost(const Lnp& lnp, const Vec2& goal, Mode mode, const PlannerConfig& cfg);

/// Minimum-cost LNP with its cost filled in; nullopt when no candidate has
/// a cost below 1. Ties go to the smallest |azimuth|, then the smallest
/// azimuth.
std::optional<Lnp> select_lnp(const std::vector<Lnp>& lnps, const Vec2& goal, Mode mode,
                              const PlannerConfig& cfg);

/// Replaces the selection by the goal direction when the goal-capture rule
/// applies; `selected` is returned unchanged otherwise. The returned LNP keeps
/// the range of the candidate it was matched with.
std::optional<Lnp> capture_goal(const std::vector<Lnp>& lnps, std::optional<Lnp> selected,
                                const Pose& sensor, const Vec2& goal, Mode mode,
                                const PlannerConfig& cfg);

MotionCommand motion_command(const Lnp& selected, const PlannerConfig& cfg);

/// Rotate in place while no viable LNP exists.
MotionCommand recovery_command(const PlannerConfig& cfg);

}  // namespace vgnav
