#include "vgnav/simworld.hpp"

#include "vgnav/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vgnav {

bool Polygon::contains(const Vec2& p) const {
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

World::World(int cols, int rows, double cell_size, Vec2 origin)
    : cols_(cols), rows_(rows), cell_size_(cell_size), origin_(std::move(origin)) {
  if (cols < 2 || rows < 2) throw ConfigError("world grid needs at least 2x2 nodes");
  if (!(cell_size > 0.0)) throw ConfigError("world cell size must be positive");
  heights_.assign(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), 0.0);
  classes_.assign(heights_.size(), 0);
}

bool World::in_bounds(const Vec2& p) const {
  const Vec2 hi = max_corner();
  return p.x() >= origin_.x() && p.y() >= origin_.y() && p.x() <= hi.x() && p.y() <= hi.y();
}

void World::set_node_height(int i, int j, double h) { heights_[idx(i, j)] = h; }

namespace {

struct CellCoord {
  int i;
  int j;
  double u;
  double v;
};

CellCoord locate(const World& w, const Vec2& p) {
  const double fx = std::clamp((p.x() - w.origin().x()) / w.cell_size(), 0.0, w.cols() - 1.0);
  const double fy = std::clamp((p.y() - w.origin().y()) / w.cell_size(), 0.0, w.rows() - 1.0);
  const int i = std::min(static_cast<int>(fx), w.cols() - 2);
  const int j = std::min(static_cast<int>(fy), w.rows() - 2);
  return {i, j, fx - i, fy - j};
}

}  // namespace

double World::height_at(const Vec2& p) const {
  const CellCoord c = locate(*this, p);
  const double h00 = node_height(c.i, c.j), h10 = node_height(c.i + 1, c.j);
  const double h01 = node_height(c.i, c.j + 1), h11 = node_height(c.i + 1, c.j + 1);
  return (h00 * (1 - c.u) + h10 * c.u) * (1 - c.v) + (h01 * (1 - c.u) + h11 * c.u) * c.v;
}

Vec2 World::gradient_at(const Vec2& p) const {
  const CellCoord c = locate(*this, p);
  const double h00 = node_height(c.i, c.j), h10 = node_height(c.i + 1, c.j);
  const double h01 = node_height(c.i, c.j + 1), h11 = node_height(c.i + 1, c.j + 1);
  const double gx = ((h10 - h00) * (1 - c.v) + (h11 - h01) * c.v) / cell_size_;
  const double gy = ((h01 - h00) * (1 - c.u) + (h11 - h10) * c.u) / cell_size_;
  return {gx, gy};
}

int World::class_at(const Vec2& p) const {
  const int i = std::clamp(static_cast<int>(std::lround((p.x() - origin_.x()) / cell_size_)), 0, cols_ - 1);
  const int j = std::clamp(static_cast<int>(std::lround((p.y() - origin_.y()) / cell_size_)), 0, rows_ - 1);
  return node_class(i, j);
}

void World::finalize() {
  max_height_ = *std::max_element(heights_.begin(), heights_.end());
  // Within a bilinear patch each gradient component is linear in the other
  // coordinate, so the largest norm is reached at a patch corner.
  double best = 0.0;
  for (int j = 0; j + 1 < rows_; ++j) {
    for (int i = 0; i + 1 < cols_; ++i) {
      const double h00 = node_height(i, j), h10 = node_height(i + 1, j);
      const double h01 = node_height(i, j + 1), h11 = node_height(i + 1, j + 1);
      const double gx0 = std::abs(h10 - h00), gx1 = std::abs(h11 - h01);
      const double gy0 = std::abs(h01 - h00), gy1 = std::abs(h11 - h10);
      best = std::max(best, std::hypot(std::max(gx0, gx1), std::max(gy0, gy1)));
    }
  }
  max_slope_ = best / cell_size_;
  for (int c : classes_) {
    if (c < 0 || static_cast<std::size_t>(c) >= class_names.size()) {
      throw ConfigError(fmt::format("world class index {} has no name", c));
    }
  }
}

const Polygon* World::region(const std::string& name) const {
  for (const auto& r : regions) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

int World::class_index(const std::string& name) const {
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::optional<double> raycast(const World& world, const Vec3& origin, const Vec3& direction,
                              double max_range, const RaycastOptions& opts) {
  const Vec3 d = direction.normalized();
  const double dxy = d.head<2>().norm();
  // Fastest rate at which the ray can approach the terrain per unit length.
  const double closing = world.max_slope() * dxy - d.z();
  auto gap = [&](double t) {
    const Vec3 p = origin + t * d;
    return p.z() - world.height_at(p.head<2>());
  };

  double t = 0.0;
  double f = gap(0.0);
  if (f <= 0.0) return 0.0;
  while (t < max_range) {
    if (closing <= 0.0) return std::nullopt;
    const Vec3 p = origin + t * d;
    if (d.z() >= 0.0 && p.z() > world.max_height()) return std::nullopt;
    const double t_next = std::min(max_range, t + std::max(opts.step, f / closing));
    const double f_next = gap(t_next);
    if (f_next <= 0.0) {
      double lo = t, hi = t_next;
      while (hi - lo > opts.tolerance) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
      }
      return hi;
    }
    t = t_next;
    f = f_next;
  }
  return std::nullopt;
}

double LidarModel::channel_elevation(int c) const {
  if (channels == 1) return 0.5 * (elevation_min + elevation_max);
  return elevation_min + (elevation_max - elevation_min) * c / (channels - 1);
}

void LidarModel::validate(double surface_radius) const {
  if (channels < 1) throw ConfigError("lidar needs at least one channel");
  if (!(azimuth_step > 0.0)) throw ConfigError("lidar azimuth step must be positive");
  if (!(max_range > 0.0) || max_range > surface_radius) {
    throw ConfigError(fmt::format("lidar max range {} must be in (0, {}]", max_range, surface_radius));
  }
  if (noise_sigma < 0.0) throw ConfigError("lidar noise sigma must be non-negative");
  if (!(elevation_max >= elevation_min)) throw ConfigError("lidar elevation range is inverted");
}

Pose sensor_pose(const RobotState& robot, double mount_height) {
  return {robot.pose.position + Vec3(0.0, 0.0, mount_height), robot.pose.heading};
}

double NormalStream::uniform() {
  // 53 random bits mapped to (0, 1).
  return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::next() {
  if (spare_) {
    const double s = *spare_;
    spare_.reset();
    return s;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  return r * std::cos(2.0 * kPi * u2);
}

std::vector<Vec3> simulate_lidar(const World& world, const RobotState& robot,
                                 const LidarModel& model, std::uint64_t seed) {
  const Pose sensor = sensor_pose(robot, model.mount_height);
  const Eigen::Matrix3d rot = sensor.transform().linear();
  const int az_count = std::max(1, static_cast<int>(std::lround(2.0 * kPi / model.azimuth_step)));
  NormalStream noise(seed);
  std::vector<Vec3> cloud;
  cloud.reserve(static_cast<std::size_t>(az_count * model.channels));
  for (int c = 0; c < model.channels; ++c) {
    const double el = model.channel_elevation(c);
    for (int k = 0; k < az_count; ++k) {
      const double az = -kPi + k * (2.0 * kPi / az_count);
      const Vec3 dir_robot(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const auto hit = raycast(world, sensor.position, rot * dir_robot, model.max_range);
      // One draw per ray keeps the stream aligned whether or not rays hit.
      const double eps = model.noise_sigma > 0.0 ? model.noise_sigma * noise.next() : 0.0;
      if (!hit) continue;
      const double range = *hit + eps;
      if (range <= 0.0) continue;
      cloud.push_back(range * dir_robot);
    }
  }
  return cloud;
}

std::pair<double, double> terrain_pitch_roll(const World& world, const Vec2& p, double heading) {
  const Vec2 g = world.gradient_at(p);
  const Vec2 fwd(std::cos(heading), std::sin(heading));
  const Vec2 left(-fwd.y(), fwd.x());
  return {std::atan(g.dot(fwd)), std::atan(g.dot(left))};
}

StepResult step_robot(const RobotState& state, const MotionCommand& cmd, double dt,
                      const World& world, const KinematicLimits& limits) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_robot: dt must be positive");
  StepResult out{state, false};
  RobotState& s = out.state;
  const double v = state.stuck ? 0.0 : std::clamp(cmd.linear, 0.0, limits.max_linear);
  s.linear_vel = v;
  s.angular_vel = cmd.angular;
  s.pose.heading = wrap_angle(state.pose.heading + cmd.angular * dt);
  const Vec2 xy = state.pose.xy() + v * dt * Vec2(std::cos(s.pose.heading), std::sin(s.pose.heading));
  if (!world.in_bounds(xy)) {
    out.out_of_bounds = true;
    return out;
  }
  s.pose.position = Vec3(xy.x(), xy.y(), world.height_at(xy));
  if (!s.stuck) {
    const auto [pitch, roll] = terrain_pitch_roll(world, xy, s.pose.heading);
    s.stuck = std::max(std::abs(pitch), std::abs(roll)) > limits.climb_limit;
  }
  return out;
}

std::vector<RegionFlag> region_events(std::span<const Pose> trajectory, const World& world) {
  std::vector<RegionFlag> flags;
  flags.reserve(world.regions.size());
  for (const Polygon& poly : world.regions) {
    RegionFlag f{poly.name, false};
    for (const Pose& p : trajectory) {
      if (poly.contains(p.xy())) {
        f.entered = true;
        break;
      }
    }
    flags.push_back(std::move(f));
  }
  return flags;
}

void write_world(const std::filesystem::path& path, const World& world) {
  std::ofstream probe(path);
  if (!probe) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  probe.close();
  auto out = fmt::output_file(path.string());
  out.print("vgnav-world 1\n");
  out.print("grid {} {} {} {} {}\n", world.cols(), world.rows(), world.cell_size(),
            world.origin().x(), world.origin().y());
  out.print("classes {}", world.class_names.size());
  for (const auto& n : world.class_names) out.print(" {}", n);
  out.print("\nspawn {} {} {}\n", world.spawn.position.x(), world.spawn.position.y(), world.spawn.heading);
  out.print("goal {} {}\n", world.goal.x(), world.goal.y());
  out.print("heights\n");
  for (int j = 0; j < world.rows(); ++j) {
    for (int i = 0; i < world.cols(); ++i) out.print("{}{}", i ? " " : "", world.node_height(i, j));
    out.print("\n");
  }
  out.print("class_indices\n");
  for (int j = 0; j < world.rows(); ++j) {
    for (int i = 0; i < world.cols(); ++i) out.print("{}{}", i ? " " : "", world.node_class(i, j));
    out.print("\n");
  }
  out.print("regions {}\n", world.regions.size());
  for (const auto& r : world.regions) {
    out.print("region {} {}", r.name, r.vertices.size());
    for (const auto& v : r.vertices) out.print(" {} {}", v.x(), v.y());
    out.print("\n");
  }
}

World read_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open world file '{}'", path.string()));
  auto fail = [&](const std::string& what) -> ConfigError {
    return ConfigError(fmt::format("{}: {}", path.string(), what));
  };
  auto expect = [&](const char* keyword) {
    std::string tok;
    if (!(in >> tok) || tok != keyword) throw fail(fmt::format("expected '{}'", keyword));
  };

  expect("vgnav-world");
  int version = 0;
  in >> version;
  if (version != 1) throw fail("unsupported world file version");
  expect("grid");
  int cols = 0, rows = 0;
  double cell = 0.0, ox = 0.0, oy = 0.0;
  if (!(in >> cols >> rows >> cell >> ox >> oy)) throw fail("malformed grid line");
  World w(cols, rows, cell, Vec2(ox, oy));
  expect("classes");
  std::size_t nc = 0;
  in >> nc;
  w.class_names.resize(nc);
  for (auto& n : w.class_names) in >> n;
  expect("spawn");
  double sx = 0, sy = 0, sh = 0;
  in >> sx >> sy >> sh;
  expect("goal");
  double gx = 0, gy = 0;
  in >> gx >> gy;
  expect("heights");
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      double h = 0;
      if (!(in >> h)) throw fail("truncated height grid");
      w.set_node_height(i, j, h);
    }
  }
  expect("class_indices");
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      int c = 0;
      if (!(in >> c)) throw fail("truncated class grid");
      w.set_node_class(i, j, c);
    }
  }
  expect("regions");
  std::size_t nr = 0;
  in >> nr;
  for (std::size_t r = 0; r < nr; ++r) {
    expect("region");
    Polygon poly;
    std::size_t nv = 0;
    in >> poly.name >> nv;
    for (std::size_t k = 0; k < nv; ++k) {
      double x = 0, y = 0;
      if (!(in >> x >> y)) throw fail("truncated region polygon");
      poly.vertices.emplace_back(x, y);
    }
    w.regions.push_back(std::move(poly));
  }
  if (!in) throw fail("malformed world file");
  w.finalize();
  w.spawn = Pose(Vec3(sx, sy, w.height_at({sx, sy})), sh);
  w.goal = Vec2(gx, gy);
  return w;
}

}  // namespace vgnav
