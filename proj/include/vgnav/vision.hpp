#pragma once

// Camera simulation and the navigability pipeline: a ground-truth
// segmentation oracle renders per-pixel depth and terrain class, classes are
// mapped to a binary navigability image, and valid pixels are lifted back to
// a 3D navigability cloud in the robot frame.

#include "vgnav/geometry.hpp"
#include "vgnav/simworld.hpp"
#include "vgnav/surfaces.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vgnav {

/// Which semantic classes the robot may drive on.
struct SemanticClassMap {
  std::map<std::string, bool> navigable;

  /// Throws ConfigError for an unknown class.
  [[nodiscard]] bool is_navigable(const std::string& name) const;
  /// Throws ConfigError when any of `names` is missing.
  void require(const std::vector<std::string>& names) const;
};

/// Level pinhole camera. `offset` is the optical centre relative to the
/// robot-frame origin (the LiDAR centre).
struct CameraModel {
  int width = 160;
  int height = 120;
  double horizontal_fov = deg2rad(87.0);
  double vertical_fov = deg2rad(58.0);
  double max_range = 20.0;
  Vec3 offset = Vec3(0.1, 0.0, -0.2);
  double label_noise = 0.0;  // probability of replacing a pixel's class

  /// Unit ray through the centre of pixel (u, v) in the camera frame
  /// (x forward, y left, z up; u grows rightwards, v downwards).
  [[nodiscard]] Vec3 pixel_direction(int u, int v) const;
  [[nodiscard]] AngularSpan fov() const {
    return AngularSpan::centered(horizontal_fov, vertical_fov);
  }
  void validate() const;
};

/// Pose of the camera in the world for a robot state.
Pose camera_pose(const RobotState& robot, const LidarModel& lidar, const CameraModel& camera);

inline constexpr int kNoReturn = -1;

/// Range along each pixel ray (metres, 0 for no return) and class index into
/// class_names (kNoReturn for no return). Row-major, v major.
struct DepthClassImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<int> classes;
  std::vector<std::string> class_names;

  [[nodiscard]] std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u);
  }
};

struct NavigabilityImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 0 or 255
};

/// Renders the ground-truth depth and class image seen from `camera_pose`.
DepthClassImage segment_oracle(const World& world, const Pose& camera_pose,
                               const CameraModel& camera, std::uint64_t seed = 0);

/// 255 where the pixel's class is navigable, 0 otherwise (including no-return).
NavigabilityImage navigability_image(const DepthClassImage& image, const SemanticClassMap& map);

/// Back-projects every valid-depth pixel into the robot frame.
NavigabilityCloud project_navigability(const NavigabilityImage& nav, const DepthClassImage& depth,
                                       const CameraModel& camera);

/// Plain-text portable graymap (P2).
void write_pgm(const std::filesystem::path& path, const NavigabilityImage& image);

}  // namespace vgnav
