#pragma once

// Spherical surface representations of point clouds.
//
// Clouds are expressed in the robot frame, whose origin is the LiDAR optical
// centre (x forward, y left, z up). Each point maps to a direction
// (azimuth, elevation) on a shell of fixed radius around that origin.

#include "vgnav/geometry.hpp"
#include "vgnav/gp_core.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace vgnav {

struct SphericalPoint {
  double azimuth = 0.0;    // [-pi, pi)
  double elevation = 0.0;  // [-pi/2, pi/2]
  double radius = 0.0;
};

/// Throws std::invalid_argument for a zero or non-finite vector.
SphericalPoint cartesian_to_spherical(const Vec3& p);
Vec3 spherical_to_cartesian(const SphericalPoint& s);

/// Rectangular angular window (radians), inclusive bounds.
struct AngularSpan {
  double azimuth_min = -kPi;
  double azimuth_max = kPi;
  double elevation_min = -kPi / 2;
  double elevation_max = kPi / 2;

  [[nodiscard]] bool contains(double azimuth, double elevation) const {
    return azimuth >= azimuth_min && azimuth <= azimuth_max &&
           elevation >= elevation_min && elevation <= elevation_max;
  }
  [[nodiscard]] bool empty() const {
    return !(azimuth_max > azimuth_min) || !(elevation_max > elevation_min);
  }
  /// Symmetric window of the given full angles, centred on the x axis.
  static AngularSpan centered(double horizontal_fov, double vertical_fov) {
    return {-horizontal_fov / 2, horizontal_fov / 2, -vertical_fov / 2, vertical_fov / 2};
  }
};

struct OccupancyPoint {
  double azimuth = 0.0;
  double elevation = 0.0;
  double occupancy = 0.0;  // surface_radius - range
};

struct OccupancySurface {
  double surface_radius = 20.0;
  std::vector<OccupancyPoint> points;
  AngularSpan span;  // bounding box of the projected points

  [[nodiscard]] TrainingSet training_set(double noise_variance) const;
};

/// A point of the navigability cloud: position plus iota in {0, 255}.
struct NavPoint {
  Vec3 position;
  std::uint8_t navigability = 0;
};
using NavigabilityCloud = std::vector<NavPoint>;

struct VisualPoint {
  double azimuth = 0.0;
  double elevation = 0.0;
  double radius = 0.0;
  std::uint8_t navigability = 0;
};

struct VisualSurface {
  double surface_radius = 20.0;
  std::vector<VisualPoint> points;
  AngularSpan span;  // the camera field of view
};

/// Projects a cloud onto the occupancy surface. Points at or beyond the
/// surface radius are discarded; when several points share a direction
/// (within `direction_tolerance` rad) the closest one is kept.
OccupancySurface build_occupancy_surface(std::span<const Vec3> cloud,
                                         double surface_radius,
                                         double direction_tolerance = 1e-6);

/// Projects a navigability cloud; points outside `fov` (or beyond the
/// surface radius) are dropped.
VisualSurface build_visual_surface(std::span<const NavPoint> cloud,
                                   double surface_radius,
                                   const AngularSpan& fov);

struct VisualDatasets {
  TrainingSet navigability;  // targets iota/255
  TrainingSet depth;         // targets surface_radius - range, range < cutoff
};

/// Splits the visual surface into the navigability and depth training sets.
/// The depth set may be empty.
VisualDatasets split_visual_datasets(const VisualSurface& surface,
                                     double depth_cutoff,
                                     double nav_noise_variance = 0.05,
                                     double depth_noise_variance = 0.05);

/// Regular azimuth x elevation lattice. Node (row r, column c) sits at
/// (azimuths[c], elevations[r]); rows are ordered by increasing elevation.
struct Lattice {
  std::vector<double> azimuths;
  std::vector<double> elevations;

  /// Columns at az_min + i*step for i in [0, count) and rows likewise.
  static Lattice uniform(double az_min, double az_step, int az_count,
                         double el_min, double el_step, int el_count);
  /// Full circle [-pi, pi) at `az_res` columns, elevations [el_min, el_max].
  static Lattice full_circle(double az_res, double el_min, double el_max,
                             double el_res);

  [[nodiscard]] std::size_t rows() const { return elevations.size(); }
  [[nodiscard]] std::size_t cols() const { return azimuths.size(); }
  [[nodiscard]] std::size_t size() const { return rows() * cols(); }
  [[nodiscard]] std::size_t index(std::size_t row, std::size_t col) const {
    return row * cols() + col;
  }
  /// All nodes, row-major.
  [[nodiscard]] Inputs nodes() const;
};

struct VarianceSurface {
  Lattice lattice;
  std::vector<double> mean;      // row-major, same layout as lattice.nodes()
  std::vector<double> variance;

  [[nodiscard]] double variance_at(std::size_t row, std::size_t col) const {
    return variance[lattice.index(row, col)];
  }
};

VarianceSurface variance_surface(const SgpModel& model, const Lattice& lattice);

// Whitespace-delimited point clouds: "x y z" or "x y z iota" per line.
std::vector<Vec3> read_cloud(const std::filesystem::path& path);
NavigabilityCloud read_nav_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, std::span<const Vec3> cloud);
void write_nav_cloud(const std::filesystem::path& path, std::span<const NavPoint> cloud);
/// Exports the surface as Cartesian points at the encoded ranges.
void write_surface(const std::filesystem::path& path, const OccupancySurface& surface);
void write_surface(const std::filesystem::path& path, const VisualSurface& surface);

}  // namespace vgnav
