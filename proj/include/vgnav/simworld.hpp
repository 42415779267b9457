#pragma once

// Deterministic terrain simulator: bilinear heightfield with per-node
// semantic classes, raycast sensors and unicycle kinematics.

#include "vgnav/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace vgnav {

struct Polygon {
  std::string name;
  std::vector<Vec2> vertices;

  /// Even-odd rule; points on an edge may fall either side.
  [[nodiscard]] bool contains(const Vec2& p) const;
};

/// Heightfield sampled at grid nodes. Node (col i, row j) sits at
/// origin + (i, j) * cell_size; class_grid shares the node layout.
class World {
 public:
  World() = default;
  World(int cols, int rows, double cell_size, Vec2 origin);

  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] double cell_size() const { return cell_size_; }
  [[nodiscard]] const Vec2& origin() const { return origin_; }
  [[nodiscard]] Vec2 min_corner() const { return origin_; }
  [[nodiscard]] Vec2 max_corner() const {
    return origin_ + Vec2((cols_ - 1) * cell_size_, (rows_ - 1) * cell_size_);
  }
  [[nodiscard]] bool in_bounds(const Vec2& p) const;

  [[nodiscard]] double node_height(int i, int j) const { return heights_[idx(i, j)]; }
  void set_node_height(int i, int j, double h);
  [[nodiscard]] int node_class(int i, int j) const { return classes_[idx(i, j)]; }
  void set_node_class(int i, int j, int c) { classes_[idx(i, j)] = c; }
  [[nodiscard]] Vec2 node_position(int i, int j) const {
    return origin_ + Vec2(i * cell_size_, j * cell_size_);
  }

  /// Bilinear height; positions outside the grid are clamped to the border.
  [[nodiscard]] double height_at(const Vec2& p) const;
  /// Analytic gradient of the bilinear patch containing p.
  [[nodiscard]] Vec2 gradient_at(const Vec2& p) const;
  /// Class of the nearest node.
  [[nodiscard]] int class_at(const Vec2& p) const;
  [[nodiscard]] const std::string& class_name_at(const Vec2& p) const {
    return class_names[static_cast<std::size_t>(class_at(p))];
  }
  /// Upper bound of |grad h| over the whole field.
  [[nodiscard]] double max_slope() const { return max_slope_; }
  [[nodiscard]] double max_height() const { return max_height_; }

  /// Recomputes the cached slope/height bounds; call after editing heights.
  void finalize();

  std::vector<std::string> class_names;
  std::vector<Polygon> regions;
  Pose spawn;
  Vec2 goal = Vec2::Zero();

  [[nodiscard]] const Polygon* region(const std::string& name) const;
  [[nodiscard]] int class_index(const std::string& name) const;  // -1 if absent

 private:
  [[nodiscard]] std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(i);
  }

  int cols_ = 0;
  int rows_ = 0;
  double cell_size_ = 1.0;
  Vec2 origin_ = Vec2::Zero();
  std::vector<double> heights_;
  std::vector<int> classes_;
  double max_slope_ = 0.0;
  double max_height_ = 0.0;
};

/// First intersection distance of origin + t * direction with the terrain,
/// t in (0, max_range]. Fixed-step marching (skipping ahead when the slope
/// bound proves no crossing is possible) followed by bisection. Beyond the
/// grid the terrain continues at its border height.
struct RaycastOptions {
  double step = 0.1;
  double tolerance = 1e-6;
};
std::optional<double> raycast(const World& world, const Vec3& origin,
                              const Vec3& direction, double max_range,
                              const RaycastOptions& opts = {});

struct RobotState {
  Pose pose;  // position.z is the terrain height under the robot
  double linear_vel = 0.0;
  double angular_vel = 0.0;
  bool stuck = false;
};

struct LidarModel {
  int channels = 16;
  double elevation_min = deg2rad(-15.0);
  double elevation_max = deg2rad(15.0);
  double azimuth_step = deg2rad(2.0);
  double max_range = 20.0;
  double noise_sigma = 0.0;
  double mount_height = 0.5;  // optical centre above the terrain contact point

  [[nodiscard]] double channel_elevation(int c) const;
  void validate(double surface_radius) const;
};

/// Robot-frame origin (LiDAR optical centre) in world coordinates.
Pose sensor_pose(const RobotState& robot, double mount_height);

/// Deterministic stream of standard normal samples (Box-Muller over
/// mt19937_64), identical on every platform.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  double next();
  double uniform();

 private:
  std::mt19937_64 rng_;
  std::optional<double> spare_;
};

/// Simulated LiDAR scan, robot frame. Misses are omitted.
std::vector<Vec3> simulate_lidar(const World& world, const RobotState& robot,
                                 const LidarModel& model, std::uint64_t seed);

struct KinematicLimits {
  double climb_limit = deg2rad(20.0);
  double max_linear = 1.2;
};

struct StepResult {
  RobotState state;
  bool out_of_bounds = false;
};

/// Terrain pitch and roll experienced at `p` with the given heading.
std::pair<double, double> terrain_pitch_roll(const World& world, const Vec2& p,
                                             double heading);

/// Unicycle integration: rotate, then advance along the new heading. Once
/// stuck the robot can no longer translate for the rest of the trial.
StepResult step_robot(const RobotState& state, const MotionCommand& cmd, double dt,
                      const World& world, const KinematicLimits& limits);

struct RegionFlag {
  std::string name;
  bool entered = false;
};
std::vector<RegionFlag> region_events(std::span<const Pose> trajectory,
                                      const World& world);

// World files.
void write_world(const std::filesystem::path& path, const World& world);
World read_world(const std::filesystem::path& path);

// Bundled scenario worlds.
World make_flat_world(double half_extent = 20.0, double cell_size = 0.25);
World make_grass_mud_hsg_world();
World make_grass_corner_table_world();
/// Generator lookup by name: flat, grass_mud_hsg, grass_corner_table.
World make_world(const std::string& name);
std::vector<std::string> world_generator_names();

}  // namespace vgnav
