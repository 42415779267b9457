#include <doctest.h>

#include "vgnav/simworld.hpp"
#include "vgnav/surfaces.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

using namespace vgnav;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("vgnav_surfaces_" + name);
}

// Occupancy-style data: a dense patch of returns for azimuth in [-1, 0]
// and nothing for azimuth > 0.
TrainingSet half_covered_set() {
  TrainingSet t;
  const int na = 21, ne = 5;
  t.inputs.resize(na * ne, 2);
  t.targets.resize(na * ne);
  int k = 0;
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < ne; ++j) {
      const double az = -1.0 + i * 0.05;
      const double el = -0.2 + j * 0.05;
      t.inputs.row(k) << az, el;
      t.targets(k) = 15.0 + std::sin(3.0 * az) - 2.0 * el;
      ++k;
    }
  }
  t.noise_variance = 0.05;
  return t;
}

}  // namespace

TEST_CASE("cartesian_to_spherical on the axes") {
  const auto x = cartesian_to_spherical(Vec3(1, 0, 0));
  CHECK(x.azimuth == doctest::Approx(0.0));
  CHECK(x.elevation == doctest::Approx(0.0));
  CHECK(x.radius == doctest::Approx(1.0));

  const auto y = cartesian_to_spherical(Vec3(0, 2, 0));
  CHECK(y.azimuth == doctest::Approx(kPi / 2));
  CHECK(y.elevation == doctest::Approx(0.0));
  CHECK(y.radius == doctest::Approx(2.0));

  const auto z = cartesian_to_spherical(Vec3(0, 0, 3));
  CHECK(z.elevation == doctest::Approx(kPi / 2));
  CHECK(z.radius == doctest::Approx(3.0));
}

TEST_CASE("cartesian_to_spherical rejects zero and non-finite vectors") {
  CHECK_THROWS_AS(cartesian_to_spherical(Vec3::Zero()), std::invalid_argument);
  CHECK_THROWS_AS(cartesian_to_spherical(Vec3(std::nan(""), 1, 0)), std::invalid_argument);
}

TEST_CASE("spherical round trip stays below a nanometre") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const SphericalPoint s = cartesian_to_spherical(p);
    CHECK(s.azimuth >= -kPi);
    CHECK(s.azimuth < kPi);
    CHECK((spherical_to_cartesian(s) - p).norm() < 1e-9);
  }
}

TEST_CASE("occupancy is the surface radius minus the range") {
  const std::vector<Vec3> cloud{Vec3(5, 0, 0), Vec3(20.5, 0, 1), Vec3(0, 3, 4)};
  const OccupancySurface s = build_occupancy_surface(cloud, 20.0);
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0].occupancy == doctest::Approx(15.0));
  CHECK(s.points[1].occupancy == doctest::Approx(15.0));
  for (const auto& p : s.points) {
    CHECK(p.occupancy >= 0.0);
    CHECK(p.occupancy <= 20.0);
  }
}

TEST_CASE("empty cloud gives an empty surface") {
  const OccupancySurface s = build_occupancy_surface(std::vector<Vec3>{}, 20.0);
  CHECK(s.points.empty());
  CHECK(s.training_set(0.05).size() == 0);
}

TEST_CASE("duplicate directions keep the closest return") {
  const std::vector<Vec3> cloud{Vec3(8, 0, 0), Vec3(3, 0, 0), Vec3(6, 0, 0)};
  const OccupancySurface s = build_occupancy_surface(cloud, 20.0);
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0].occupancy == doctest::Approx(17.0));
}

TEST_CASE("occupancy projection recovers every in-range radius") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  std::vector<Vec3> cloud;
  while (cloud.size() < 500) {
    const Vec3 p(u(rng), u(rng), u(rng));
    if (p.norm() < 20.0) cloud.push_back(p);
  }
  const OccupancySurface s = build_occupancy_surface(cloud, 20.0);
  REQUIRE(s.points.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto sp = cartesian_to_spherical(cloud[i]);
    bool found = false;
    for (const auto& p : s.points) {
      if (std::abs(p.azimuth - sp.azimuth) < 1e-12 && std::abs(p.elevation - sp.elevation) < 1e-12) {
        CHECK(20.0 - p.occupancy == doctest::Approx(cloud[i].norm()).epsilon(1e-12));
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("flat-ground scan: occupancy grows with depression angle") {
  const World world = make_flat_world(30.0, 0.5);
  RobotState robot;
  robot.pose = Pose(Vec3(0, 0, 0), 0.0);
  LidarModel lidar;
  lidar.max_range = 25.0;
  const auto cloud = simulate_lidar(world, robot, lidar, 1);
  const OccupancySurface s = build_occupancy_surface(cloud, 30.0);
  REQUIRE(!s.points.empty());

  // Group by elevation ring; the closed-form ground range is h / sin(-beta).
  std::map<double, double> ring;
  for (const auto& p : s.points) {
    CHECK(p.elevation < 0.0);
    const double expected = 30.0 - lidar.mount_height / std::sin(-p.elevation);
    CHECK(p.occupancy == doctest::Approx(expected).epsilon(1e-4));
    ring[std::round(rad2deg(-p.elevation) * 1e6) * 1e-6] = p.occupancy;
  }
  REQUIRE(ring.size() >= 3);
  double previous = -1.0;
  for (const auto& [depression, omega] : ring) {
    CHECK(omega > previous);
    previous = omega;
  }
}

TEST_CASE("visual surface keeps in-FoV points with their labels") {
  const AngularSpan fov = AngularSpan::centered(deg2rad(87.0), deg2rad(58.0));

  SUBCASE("straight ahead") {
    const std::vector<NavPoint> cloud{{Vec3(4, 0, 0), 255}};
    const VisualSurface s = build_visual_surface(cloud, 20.0, fov);
    REQUIRE(s.points.size() == 1);
    CHECK(s.points[0].azimuth == doctest::Approx(0.0));
    CHECK(s.points[0].elevation == doctest::Approx(0.0));
    CHECK(s.points[0].radius == doctest::Approx(4.0));
    CHECK(s.points[0].navigability == 255);
  }

  SUBCASE("beyond the half angle") {
    const double az = deg2rad(50.0);
    const std::vector<NavPoint> cloud{{Vec3(std::cos(az), std::sin(az), 0) * 5.0, 255}};
    CHECK(build_visual_surface(cloud, 20.0, fov).points.empty());
  }

  SUBCASE("cardinality and label counts") {
    std::vector<NavPoint> cloud;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(-0.5, 0.5);
    for (int i = 0; i < 100; ++i) {
      const double a = ang(rng), e = 0.5 * ang(rng);
      cloud.push_back({spherical_to_cartesian({a, e, 6.0}), static_cast<std::uint8_t>(i < 40 ? 255 : 0)});
    }
    const VisualSurface s = build_visual_surface(cloud, 20.0, fov);
    REQUIRE(s.points.size() == 100);
    int nav = 0;
    for (const auto& p : s.points) {
      CHECK(fov.contains(p.azimuth, p.elevation));
      nav += p.navigability == 255;
    }
    CHECK(nav == 40);
  }
}

TEST_CASE("visual datasets split by depth cutoff") {
  VisualSurface s;
  s.surface_radius = 20.0;
  s.span = AngularSpan::centered(1.5, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double r = i < 30 ? 3.0 + 0.1 * i : 9.0 + 0.1 * i;
    s.points.push_back({-0.5 + 0.02 * i, -0.1, r, static_cast<std::uint8_t>(i % 2 ? 255 : 0)});
  }

  SUBCASE("partial") {
    const VisualDatasets d = split_visual_datasets(s, 8.0);
    CHECK(d.navigability.size() == 50);
    CHECK(d.depth.size() == 30);
    for (Eigen::Index i = 0; i < d.navigability.size(); ++i) {
      CHECK(d.navigability.targets(i) == (i % 2 ? 1.0 : 0.0));
    }
    for (Eigen::Index i = 0; i < d.depth.size(); ++i) {
      CHECK(d.depth.targets(i) == doctest::Approx(20.0 - (3.0 + 0.1 * static_cast<double>(i))));
    }
  }

  SUBCASE("everything beyond the cutoff") {
    const VisualDatasets d = split_visual_datasets(s, 2.0);
    CHECK(d.navigability.size() == 50);
    CHECK(d.depth.size() == 0);
  }
}

TEST_CASE("variance surface separates covered and empty directions") {
  const TrainingSet t = half_covered_set();
  const RqKernelParams k{50.0, 0.2, 1.0};
  const SgpModel model = SgpModel::build(t, t.inputs, k, t.noise_variance, AzimuthMetric::Planar);
  const double threshold = 1.0;

  const Lattice lattice = Lattice::uniform(-0.9, 0.1, 19, -0.15, 0.05, 3);
  const VarianceSurface vs = variance_surface(model, lattice);
  REQUIRE(vs.variance.size() == lattice.size());

  for (std::size_t r = 0; r < lattice.rows(); ++r) {
    for (std::size_t c = 0; c < lattice.cols(); ++c) {
      const Eigen::Vector2d q(lattice.azimuths[c], lattice.elevations[r]);
      const Prediction oracle = exact_gp_predict(t, k, q, AzimuthMetric::Planar);
      const double v = vs.variance_at(r, c);
      CHECK(v == doctest::Approx(oracle.variance).epsilon(1e-6).scale(1.0));
      if (q(0) <= -0.05) CHECK(v < threshold);
      // Nodes with no data within three length scales revert to the prior.
      if (q(0) >= 0.6) {
        CHECK(v > threshold);
        CHECK(v <= k.signal_variance + t.noise_variance + 1e-9);
      }
    }
  }

  const VarianceSurface again = variance_surface(model, lattice);
  CHECK(again.variance == vs.variance);
  CHECK(again.mean == vs.mean);
}

TEST_CASE("full-circle lattice layout") {
  const Lattice l = Lattice::full_circle(deg2rad(1.0), deg2rad(-15.0), deg2rad(15.0), deg2rad(1.0));
  CHECK(l.cols() == 360);
  CHECK(l.rows() == 31);
  CHECK(l.azimuths.front() == doctest::Approx(-kPi));
  CHECK(l.azimuths.back() < kPi);
  const Inputs n = l.nodes();
  CHECK(n.rows() == static_cast<Eigen::Index>(l.size()));
  CHECK(n(l.index(2, 5), 0) == l.azimuths[5]);
  CHECK(n(l.index(2, 5), 1) == l.elevations[2]);
}

TEST_CASE("cloud files round trip") {
  const std::vector<Vec3> cloud{Vec3(1.5, -2.25, 0.125), Vec3(-3, 4, 5)};
  const auto path = temp_file("cloud.txt");
  write_cloud(path, cloud);
  const auto back = read_cloud(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) CHECK((back[i] - cloud[i]).norm() < 1e-12);

  const std::vector<NavPoint> nav{{Vec3(1, 2, 3), 255}, {Vec3(4, 5, 6), 0}};
  const auto nav_path = temp_file("nav.txt");
  write_nav_cloud(nav_path, nav);
  const auto nav_back = read_nav_cloud(nav_path);
  REQUIRE(nav_back.size() == 2);
  CHECK(nav_back[0].navigability == 255);
  CHECK(nav_back[1].navigability == 0);
  CHECK((nav_back[1].position - Vec3(4, 5, 6)).norm() < 1e-12);
  std::filesystem::remove(path);
  std::filesystem::remove(nav_path);
}
