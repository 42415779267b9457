#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace vgnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w - kPi;
}

/// Planar robot pose: position in the world frame plus yaw. Sensors are kept
/// level, so the robot->world transform is a yaw rotation plus translation.
struct Pose {
  Vec3 position = Vec3::Zero();
  double heading = 0.0;

  Pose() = default;
  Pose(Vec3 p, double yaw) : position(std::move(p)), heading(yaw) {}

  [[nodiscard]] Eigen::Isometry3d transform() const {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = Eigen::AngleAxisd(heading, Vec3::UnitZ()).toRotationMatrix();
    t.translation() = position;
    return t;
  }

  [[nodiscard]] Vec3 to_world(const Vec3& robot_point) const {
    return transform() * robot_point;
  }

  [[nodiscard]] Vec3 to_robot(const Vec3& world_point) const {
    return transform().inverse() * world_point;
  }

  [[nodiscard]] Vec2 xy() const { return position.head<2>(); }
};

/// Unicycle velocity command (m/s, rad/s; positive angular turns left).
struct MotionCommand {
  double linear = 0.0;
  double angular = 0.0;
};

}  // namespace vgnav
