#include "vgnav/surfaces.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace vgnav {

namespace {

struct DirectionKey {
  long long a;
  long long e;
  bool operator==(const DirectionKey&) const = default;
};

struct DirectionKeyHash {
  std::size_t operator()(const DirectionKey& k) const noexcept {
    return std::hash<long long>{}(k.a) ^ (std::hash<long long>{}(k.e) * 0x9e3779b97f4a7c15ULL);
  }
};

void grow_span(AngularSpan& span, double az, double el, bool first) {
  if (first) {
    span = {az, az, el, el};
    return;
  }
  span.azimuth_min = std::min(span.azimuth_min, az);
  span.azimuth_max = std::max(span.azimuth_max, az);
  span.elevation_min = std::min(span.elevation_min, el);
  span.elevation_max = std::max(span.elevation_max, el);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) {
      throw std::runtime_error(fmt::format("{}:{}: malformed number", path.string(), lineno));
    }
    if (values.empty()) continue;
    fn(values, lineno);
  }
}

}  // namespace

SphericalPoint cartesian_to_spherical(const Vec3& p) {
  if (!p.allFinite()) throw std::invalid_argument("cartesian_to_spherical: non-finite point");
  const double r = p.norm();
  if (r == 0.0) throw std::invalid_argument("cartesian_to_spherical: zero vector");
  return {wrap_angle(std::atan2(p.y(), p.x())), std::asin(std::clamp(p.z() / r, -1.0, 1.0)), r};
}

Vec3 spherical_to_cartesian(const SphericalPoint& s) {
  const double c = std::cos(s.elevation);
  return {s.radius * c * std::cos(s.azimuth), s.radius * c * std::sin(s.azimuth),
          s.radius * std::sin(s.elevation)};
}

TrainingSet OccupancySurface::training_set(double noise_variance) const {
  TrainingSet t;
  t.inputs.resize(static_cast<Eigen::Index>(points.size()), 2);
  t.targets.resize(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    t.inputs.row(r) << points[i].azimuth, points[i].elevation;
    t.targets(r) = points[i].occupancy;
  }
  t.noise_variance = noise_variance;
  return t;
}

OccupancySurface build_occupancy_surface(std::span<const Vec3> cloud,
                                         double surface_radius,
                                         double direction_tolerance) {
  if (!(surface_radius > 0.0)) {
    throw std::invalid_argument("surface radius must be positive");
  }
  OccupancySurface surf;
  surf.surface_radius = surface_radius;
  std::unordered_map<DirectionKey, std::size_t, DirectionKeyHash> seen;
  seen.reserve(cloud.size());
  for (const Vec3& p : cloud) {
    if (!p.allFinite() || p.squaredNorm() == 0.0) continue;
    const SphericalPoint s = cartesian_to_spherical(p);
    if (s.radius > surface_radius) continue;
    const DirectionKey key{std::llround(s.azimuth / direction_tolerance),
                           std::llround(s.elevation / direction_tolerance)};
    const double omega = surface_radius - s.radius;
    auto [it, inserted] = seen.try_emplace(key, surf.points.size());
    if (inserted) {
      surf.points.push_back({s.azimuth, s.elevation, omega});
    } else if (omega > surf.points[it->second].occupancy) {
      surf.points[it->second] = {s.azimuth, s.elevation, omega};
    }
  }
  for (std::size_t i = 0; i < surf.points.size(); ++i) {
    grow_span(surf.span, surf.points[i].azimuth, surf.points[i].elevation, i == 0);
  }
  return surf;
}

VisualSurface build_visual_surface(std::span<const NavPoint> cloud,
                                   double surface_radius, const AngularSpan& fov) {
  if (fov.empty()) throw std::invalid_argument("camera field of view is empty");
  VisualSurface surf;
  surf.surface_radius = surface_radius;
  surf.span = fov;
  surf.points.reserve(cloud.size());
  for (const NavPoint& np : cloud) {
    if (!np.position.allFinite() || np.position.squaredNorm() == 0.0) continue;
    const SphericalPoint s = cartesian_to_spherical(np.position);
    if (s.radius > surface_radius || !fov.contains(s.azimuth, s.elevation)) continue;
    surf.points.push_back({s.azimuth, s.elevation, s.radius, np.navigability});
  }
  return surf;
}

VisualDatasets split_visual_datasets(const VisualSurface& surface, double depth_cutoff,
                                     double nav_noise_variance,
                                     double depth_noise_variance) {
  if (!(depth_cutoff > 0.0)) throw std::invalid_argument("depth cutoff must be positive");
  const auto n = static_cast<Eigen::Index>(surface.points.size());
  VisualDatasets out;
  out.navigability.inputs.resize(n, 2);
  out.navigability.targets.resize(n);
  out.navigability.noise_variance = nav_noise_variance;

  Eigen::Index nd = 0;
  for (const auto& p : surface.points) nd += p.radius < depth_cutoff ? 1 : 0;
  out.depth.inputs.resize(nd, 2);
  out.depth.targets.resize(nd);
  out.depth.noise_variance = depth_noise_variance;

  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = surface.points[static_cast<std::size_t>(i)];
    out.navigability.inputs.row(i) << p.azimuth, p.elevation;
    out.navigability.targets(i) = p.navigability / 255.0;
    if (p.radius < depth_cutoff) {
      out.depth.inputs.row(j) << p.azimuth, p.elevation;
      out.depth.targets(j) = surface.surface_radius - p.radius;
      ++j;
    }
  }
  return out;
}

Lattice Lattice::uniform(double az_min, double az_step, int az_count, double el_min,
                         double el_step, int el_count) {
  if (az_count < 1 || el_count < 1) throw std::invalid_argument("lattice needs >= 1 node per axis");
  Lattice l;
  l.azimuths.resize(static_cast<std::size_t>(az_count));
  l.elevations.resize(static_cast<std::size_t>(el_count));
  for (int i = 0; i < az_count; ++i) l.azimuths[static_cast<std::size_t>(i)] = az_min + i * az_step;
  for (int i = 0; i < el_count; ++i) l.elevations[static_cast<std::size_t>(i)] = el_min + i * el_step;
  return l;
}

Lattice Lattice::full_circle(double az_res, double el_min, double el_max, double el_res) {
  if (!(az_res > 0.0) || !(el_res > 0.0) || !(el_max >= el_min)) {
    throw std::invalid_argument("invalid lattice resolution or elevation range");
  }
  const int cols = static_cast<int>(std::lround(2.0 * kPi / az_res));
  const int rows = static_cast<int>(std::floor((el_max - el_min) / el_res + 1e-9)) + 1;
  return uniform(-kPi, 2.0 * kPi / cols, cols, el_min, el_res, rows);
}

Inputs Lattice::nodes() const {
  Inputs x(static_cast<Eigen::Index>(size()), 2);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) {
      x.row(static_cast<Eigen::Index>(index(r, c))) << azimuths[c], elevations[r];
    }
  }
  return x;
}

VarianceSurface variance_surface(const SgpModel& model, const Lattice& lattice) {
  VarianceSurface vs;
  vs.lattice = lattice;
  const auto pred = model.predict(lattice.nodes());
  vs.mean.resize(pred.size());
  vs.variance.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    vs.mean[i] = pred[i].mean;
    vs.variance[i] = pred[i].variance;
  }
  return vs;
}

std::vector<Vec3> read_cloud(const std::filesystem::path& path) {
  std::vector<Vec3> out;
  for_each_record(path, [&](const std::vector<double>& v, int lineno) {
    if (v.size() < 3) {
      throw std::runtime_error(fmt::format("{}:{}: expected 'x y z'", path.string(), lineno));
    }
    out.emplace_back(v[0], v[1], v[2]);
  });
  return out;
}

NavigabilityCloud read_nav_cloud(const std::filesystem::path& path) {
  NavigabilityCloud out;
  for_each_record(path, [&](const std::vector<double>& v, int lineno) {
    if (v.size() != 4 || (v[3] != 0.0 && v[3] != 255.0)) {
      throw std::runtime_error(
          fmt::format("{}:{}: expected 'x y z iota' with iota in {{0, 255}}", path.string(), lineno));
    }
    out.push_back({Vec3(v[0], v[1], v[2]), static_cast<std::uint8_t>(v[3])});
  });
  return out;
}

void write_cloud(const std::filesystem::path& path, std::span<const Vec3> cloud) {
  auto out = fmt::output_file(path.string());
  for (const Vec3& p : cloud) out.print("{:.6f} {:.6f} {:.6f}\n", p.x(), p.y(), p.z());
}

void write_nav_cloud(const std::filesystem::path& path, std::span<const NavPoint> cloud) {
  auto out = fmt::output_file(path.string());
  for (const NavPoint& p : cloud) {
    out.print("{:.6f} {:.6f} {:.6f} {}\n", p.position.x(), p.position.y(), p.position.z(),
              static_cast<int>(p.navigability));
  }
}

void write_surface(const std::filesystem::path& path, const OccupancySurface& surface) {
  auto out = fmt::output_file(path.string());
  for (const auto& p : surface.points) {
    const Vec3 xyz = spherical_to_cartesian({p.azimuth, p.elevation, surface.surface_radius - p.occupancy});
    out.print("{:.6f} {:.6f} {:.6f}\n", xyz.x(), xyz.y(), xyz.z());
  }
}

void write_surface(const std::filesystem::path& path, const VisualSurface& surface) {
  auto out = fmt::output_file(path.string());
  for (const auto& p : surface.points) {
    const Vec3 xyz = spherical_to_cartesian({p.azimuth, p.elevation, p.radius});
    out.print("{:.6f} {:.6f} {:.6f} {}\n", xyz.x(), xyz.y(), xyz.z(), static_cast<int>(p.navigability));
  }
}

}  // namespace vgnav
