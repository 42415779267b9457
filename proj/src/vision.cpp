#include "vgnav/vision.hpp"

#include "vgnav/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <cmath>
#include <stdexcept>

namespace vgnav {

bool SemanticClassMap::is_navigable(const std::string& name) const {
  const auto it = navigable.find(name);
  if (it == navigable.end()) {
    throw ConfigError(fmt::format("class '{}' is missing from the class map", name));
  }
  return it->second;
}

void SemanticClassMap::require(const std::vector<std::string>& names) const {
  for (const auto& n : names) (void)is_navigable(n);
}

Vec3 CameraModel::pixel_direction(int u, int v) const {
  const double fx = 0.5 * width / std::tan(0.5 * horizontal_fov);
  const double fy = 0.5 * height / std::tan(0.5 * vertical_fov);
  const double x = (u + 0.5 - 0.5 * width) / fx;
  const double y = (v + 0.5 - 0.5 * height) / fy;
  return Vec3(1.0, -x, -y).normalized();
}

void CameraModel::validate() const {
  if (width < 1 || height < 1) throw ConfigError("camera resolution must be positive");
  if (!(horizontal_fov > 0.0 && horizontal_fov < kPi) || !(vertical_fov > 0.0 && vertical_fov < kPi)) {
    throw ConfigError("camera field of view must be in (0, 180) degrees");
  }
  if (!(max_range > 0.0)) throw ConfigError("camera max range must be positive");
  if (label_noise < 0.0 || label_noise > 1.0) throw ConfigError("camera label noise must be in [0, 1]");
}

Pose camera_pose(const RobotState& robot, const LidarModel& lidar, const CameraModel& camera) {
  const Pose sensor = sensor_pose(robot, lidar.mount_height);
  return {sensor.to_world(camera.offset), sensor.heading};
}

DepthClassImage segment_oracle(const World& world, const Pose& pose, const CameraModel& camera,
                               std::uint64_t seed) {
  DepthClassImage img;
  img.width = camera.width;
  img.height = camera.height;
  img.class_names = world.class_names;
  const std::size_t n = static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height);
  img.depth.assign(n, 0.0);
  img.classes.assign(n, kNoReturn);
  const Eigen::Matrix3d rot = pose.transform().linear();
  const int num_classes = static_cast<int>(world.class_names.size());
  NormalStream rng(seed);
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Vec3 dir = rot * camera.pixel_direction(u, v);
      const auto hit = raycast(world, pose.position, dir, camera.max_range);
      const double draw = camera.label_noise > 0.0 ? rng.uniform() : 1.0;
      if (!hit) continue;
      const std::size_t k = img.index(u, v);
      img.depth[k] = *hit;
      int cls = world.class_at((pose.position + *hit * dir).head<2>());
      if (draw < camera.label_noise && num_classes > 1) {
        // Swap to one of the other classes, chosen by the same draw.
        const int shift = 1 + static_cast<int>(draw / camera.label_noise * (num_classes - 1));
        cls = (cls + std::min(shift, num_classes - 1)) % num_classes;
      }
      img.classes[k] = cls;
    }
  }
  return img;
}

NavigabilityImage navigability_image(const DepthClassImage& image, const SemanticClassMap& map) {
  NavigabilityImage out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.assign(image.classes.size(), 0);
  std::vector<std::uint8_t> lut(image.class_names.size());
  for (std::size_t c = 0; c < lut.size(); ++c) lut[c] = map.is_navigable(image.class_names[c]) ? 255 : 0;
  for (std::size_t k = 0; k < image.classes.size(); ++k) {
    const int c = image.classes[k];
    if (c == kNoReturn) continue;
    if (c < 0 || static_cast<std::size_t>(c) >= lut.size()) {
      throw ConfigError(fmt::format("pixel class index {} has no name", c));
    }
    out.pixels[k] = lut[static_cast<std::size_t>(c)];
  }
  return out;
}

NavigabilityCloud project_navigability(const NavigabilityImage& nav, const DepthClassImage& depth,
                                       const CameraModel& camera) {
  if (nav.width != depth.width || nav.height != depth.height ||
      nav.pixels.size() != depth.depth.size()) {
    throw std::invalid_argument("navigability and depth images differ in size");
  }
  if (depth.width != camera.width || depth.height != camera.height) {
    throw std::invalid_argument("image size does not match the camera model");
  }
  NavigabilityCloud cloud;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const std::size_t k = depth.index(u, v);
      if (!(depth.depth[k] > 0.0)) continue;
      cloud.push_back({camera.offset + depth.depth[k] * camera.pixel_direction(u, v), nav.pixels[k]});
    }
  }
  return cloud;
}

void write_pgm(const std::filesystem::path& path, const NavigabilityImage& image) {
  auto out = fmt::output_file(path.string());
  out.print("P2\n{} {}\n255\n", image.width, image.height);
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      out.print("{}{}", u ? " " : "", image.pixels[static_cast<std::size_t>(v * image.width + u)]);
    }
    out.print("\n");
  }
}

}  // namespace vgnav
