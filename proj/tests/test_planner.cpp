#include <doctest.h>

#include "test_support.hpp"
#include "vgnav/errors.hpp"
#include "vgnav/planner.hpp"
#include "vgnav/simworld.hpp"
#include "vgnav/vision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace vgnav;

namespace {

Lnp lnp_at(double az, double el, double range, const Pose& sensor, Navigability nav = Navigability::OutsideFov) {
  Lnp l;
  l.azimuth = az;
  l.elevation = el;
  l.range = range;
  l.world_xyz = sensor.to_world(spherical_to_cartesian({az, el, range}));
  l.navigability = nav;
  return l;
}

// Written out independently of the library: normalised terms, weights
// divided by their sum.
double oracle_goal_cost(const Lnp& l, const Vec2& goal, const PlannerConfig& c) {
  const double d = l.range + std::hypot(goal.x() - l.world_xyz.x(), goal.y() - l.world_xyz.y());
  const double dn = std::min(1.0, d / (c.surface_radius + c.reference_distance));
  const double an = std::abs(l.azimuth) / kPi;
  const double bn = std::abs(l.elevation) / std::max(std::abs(c.elevation_min), std::abs(c.elevation_max));
  return (c.k_dst * dn + c.k_dir * an + c.k_elv * bn) / (c.k_dst + c.k_dir + c.k_elv);
}

double oracle_mode_cost(const Lnp& l, const Vec2& goal, Mode mode, const PlannerConfig& c) {
  const double cg = oracle_goal_cost(l, goal, c);
  if (mode == Mode::G) return cg;
  if (l.navigability == Navigability::NonNavigable) return 1.0;
  if (mode == Mode::V) {
    return l.navigability == Navigability::Navigable ? cg : std::numeric_limits<double>::infinity();
  }
  return l.navigability == Navigability::Navigable ? (1.0 - c.k_nav) * cg : c.k_nav * cg;
}

// Exhaustive argmin with the documented tie-break; -1 when nothing is viable.
int brute_force(const std::vector<Lnp>& lnps, const Vec2& goal, Mode mode, const PlannerConfig& c) {
  int best = -1;
  double best_cost = 1.0;
  for (int i = 0; i < static_cast<int>(lnps.size()); ++i) {
    const double cost = oracle_mode_cost(lnps[i], goal, mode, c);
    if (!(cost < 1.0)) continue;
    if (best < 0 || cost < best_cost - 1e-12) {
      best = i;
      best_cost = cost;
    } else if (std::abs(cost - best_cost) <= 1e-12) {
      const double a = std::abs(lnps[i].azimuth), b = std::abs(lnps[best].azimuth);
      if (a < b || (a == b && lnps[i].azimuth < lnps[best].azimuth)) best = i;
    }
  }
  return best;
}

std::vector<Lnp> random_candidates(std::mt19937_64& rng, int n, const Pose& sensor, const AngularSpan& fov) {
  std::uniform_real_distribution<double> az(-kPi, kPi), el(-0.2, 0.0), range(0.5, 20.0), u(0.0, 1.0);
  std::vector<Lnp> out;
  for (int i = 0; i < n; ++i) {
    const double a = az(rng), e = el(rng);
    Navigability nav = Navigability::OutsideFov;
    if (fov.contains(a, e)) nav = u(rng) < 0.3 ? Navigability::NonNavigable : Navigability::Navigable;
    out.push_back(lnp_at(a, e, range(rng), sensor, nav));
  }
  return out;
}

// Robot at the origin facing +x on flat ground; ground beyond x = 3 is mud.
World mud_ahead_world(bool mud) {
  World w(121, 121, 0.25, Vec2(-15.0, -15.0));
  w.class_names = {"asphalt", "mud"};
  if (mud) {
    for (int j = 0; j < w.rows(); ++j) {
      for (int i = 0; i < w.cols(); ++i) {
        if (w.node_position(i, j).x() >= 3.0) w.set_node_class(i, j, 1);
      }
    }
  }
  w.finalize();
  return w;
}

}  // namespace

TEST_CASE("mode names") {
  CHECK(parse_mode("vg") == Mode::VG);
  CHECK(parse_mode("G") == Mode::G);
  CHECK(to_string(Mode::V) == "V");
  CHECK_THROWS_AS(parse_mode("GV"), ConfigError);
}

TEST_CASE("planner config validation") {
  PlannerConfig c;
  CHECK_NOTHROW(c.validate());
  PlannerConfig bad = c;
  bad.k_nav = 0.4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.elevation_min = 0.1;
  bad.elevation_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.k_dir = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("empty scene: one LNP per column at the lowest admissible elevation") {
  const Lattice lat = Lattice::full_circle(deg2rad(2.0), deg2rad(-15.0), deg2rad(5.0), deg2rad(1.0));
  VarianceSurface vs;
  vs.lattice = lat;
  vs.mean.assign(lat.size(), 0.0);
  vs.variance.assign(lat.size(), 50.05);  // prior reversion everywhere
  PlannerConfig cfg;
  cfg.elevation_min = deg2rad(-15.0);
  cfg.elevation_max = deg2rad(5.0);
  const Pose sensor(Vec3(1, 2, 0.5), 0.3);
  const auto lnps = extract_g_lnps(vs, cfg, sensor);
  REQUIRE(lnps.size() == lat.cols());
  for (const Lnp& l : lnps) {
    // The bounds are exclusive, so the -15 degree row is skipped.
    CHECK(l.elevation == doctest::Approx(deg2rad(-14.0)));
    CHECK(l.range == doctest::Approx(cfg.surface_radius));
  }
  CHECK((lnps[0].world_xyz - sensor.to_world(spherical_to_cartesian({lnps[0].azimuth, lnps[0].elevation, 20.0}))).norm() < 1e-12);
}

TEST_CASE("elevation bounds filter every LNP") {
  const Lattice lat = Lattice::full_circle(deg2rad(5.0), deg2rad(-40.0), deg2rad(20.0), deg2rad(1.0));
  VarianceSurface vs;
  vs.lattice = lat;
  vs.mean.assign(lat.size(), 5.0);
  vs.variance.resize(lat.size());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (double& v : vs.variance) v = u(rng);
  PlannerConfig cfg;
  cfg.elevation_min = deg2rad(-30.0);
  cfg.elevation_max = deg2rad(5.0);
  const auto lnps = extract_g_lnps(vs, cfg, Pose());
  CHECK(!lnps.empty());
  for (const Lnp& l : lnps) {
    CHECK(l.elevation > cfg.elevation_min);
    CHECK(l.elevation < cfg.elevation_max);
  }
}

TEST_CASE("a wall ahead removes low LNPs from its sector") {
  World w = make_flat_world(25.0, 0.25);
  const double half = 5.0 * std::tan(deg2rad(10.0));
  for (int j = 0; j < w.rows(); ++j) {
    for (int i = 0; i < w.cols(); ++i) {
      const Vec2 p = w.node_position(i, j);
      if (p.x() >= 4.8 && p.x() <= 5.2 && std::abs(p.y()) <= half) w.set_node_height(i, j, 3.0);
    }
  }
  w.finalize();
  RobotState robot;
  const LidarModel lidar;
  const auto cloud = simulate_lidar(w, robot, lidar, 1);
  const OccupancySurface surf = build_occupancy_surface(cloud, 20.0);
  const GpSettings gs = test::geometry_settings();
  const SgpModel model = fit_settings(surf.training_set(gs.noise_variance), gs, AzimuthMetric::Periodic);

  PlannerConfig cfg;
  cfg.elevation_min = deg2rad(-10.0);
  cfg.elevation_max = deg2rad(8.0);
  const Lattice lat = Lattice::full_circle(deg2rad(2.0), cfg.elevation_min, cfg.elevation_max, deg2rad(1.0));
  const Pose sensor = sensor_pose(robot, lidar.mount_height);
  const auto lnps = extract_g_lnps(variance_surface(model, lat), cfg, sensor);

  std::vector<double> outside;
  for (const Lnp& l : lnps) {
    if (std::abs(l.azimuth) >= deg2rad(40.0)) outside.push_back(l.elevation);
  }
  REQUIRE(outside.size() > 100);
  std::sort(outside.begin(), outside.end());
  const double typical = outside[outside.size() / 2];

  for (const Lnp& l : lnps) {
    if (std::abs(l.azimuth) > deg2rad(6.0)) continue;
    // Ground truth: the ray through an in-sector LNP must not hit anything
    // within the surface radius, and it must sit higher than open columns.
    const Vec3 dir = sensor.transform().linear() * spherical_to_cartesian({l.azimuth, l.elevation, 1.0});
    CHECK_FALSE(raycast(w, sensor.position, dir, cfg.surface_radius));
    CHECK(l.elevation > typical);
  }
  // Every ray below the wall top is blocked, so the truth is an empty sector
  // within these bounds.
  const Vec3 top = sensor.transform().linear() * spherical_to_cartesian({0.0, cfg.elevation_max, 1.0});
  CHECK(raycast(w, sensor.position, top, cfg.surface_radius));
}

TEST_CASE("navigability of candidates against the oracle frame") {
  const LidarModel lidar;
  CameraModel cam;
  cam.width = 80;
  cam.height = 60;
  SemanticClassMap map;
  map.navigable = {{"asphalt", true}, {"mud", false}};
  PlannerConfig cfg;
  cfg.elevation_min = deg2rad(-10.0);
  cfg.elevation_max = deg2rad(8.0);
  const Pose sensor(Vec3(0, 0, lidar.mount_height), 0.0);

  auto fit_frame = [&](const World& w, TrainingSet* data_out) {
    RobotState robot;
    const DepthClassImage img = segment_oracle(w, camera_pose(robot, lidar, cam), cam);
    const auto cloud = project_navigability(navigability_image(img, map), img, cam);
    const VisualSurface vs = build_visual_surface(cloud, cfg.visual_radius, cam.fov());
    const VisualDatasets d = split_visual_datasets(vs, cfg.depth_cutoff);
    const GpSettings ns = test::navigability_settings();
    if (data_out) *data_out = d.navigability;
    return fit_settings(d.navigability, ns, AzimuthMetric::Planar);
  };

  // Ground at -5 degrees lies 5.7 m ahead, beyond the mud edge at 3 m.
  const Lnp ahead = lnp_at(0.0, deg2rad(-5.0), 0.5 / std::sin(deg2rad(5.0)), sensor);
  const Lnp behind = lnp_at(deg2rad(120.0), deg2rad(-5.0), 5.0, sensor);

  SUBCASE("mud ahead") {
    TrainingSet data;
    const SgpModel nav = fit_frame(mud_ahead_world(true), &data);
    const auto out = assess_navigability({ahead, behind}, nav, nullptr, cam.fov(), cfg);
    REQUIRE(out.size() == 2);
    CHECK(out[0].navigability == Navigability::NonNavigable);
    CHECK(out[1].navigability == Navigability::OutsideFov);
    CHECK_FALSE(classify(nav, Eigen::Vector2d(ahead.azimuth, ahead.elevation), cfg.nav_threshold));
    // Cross-check the side of the threshold with the exact GP on the same data.
    TrainingSet thinned = data;
    if (thinned.size() > 400) {
      TrainingSet t;
      t.noise_variance = nav.noise_variance;
      t.inputs.resize(400, 2);
      t.targets.resize(400);
      for (Eigen::Index i = 0; i < 400; ++i) {
        t.inputs.row(i) = data.inputs.row(i * data.size() / 400);
        t.targets(i) = data.targets(i * data.size() / 400);
      }
      thinned = t;
    }
    thinned.noise_variance = nav.noise_variance;
    const Prediction exact = exact_gp_predict(thinned, nav.kernel, Eigen::Vector2d(ahead.azimuth, ahead.elevation));
    CHECK(exact.mean < cfg.nav_threshold);
  }

  SUBCASE("asphalt ahead") {
    const SgpModel nav = fit_frame(mud_ahead_world(false), nullptr);
    const auto out = assess_navigability({ahead, behind}, nav, nullptr, cam.fov(), cfg);
    REQUIRE(out.size() == 2);
    CHECK(out[0].navigability == Navigability::Navigable);
    CHECK(out[1].navigability == Navigability::OutsideFov);
    CHECK(classify(nav, Eigen::Vector2d(ahead.azimuth, ahead.elevation), cfg.nav_threshold));
  }
}

TEST_CASE("depth variance filter drops uncertain candidates in V mode") {
  // Depth data only on the left half of the view.
  TrainingSet depth;
  depth.noise_variance = 0.05;
  depth.inputs.resize(60, 2);
  depth.targets.resize(60);
  for (int i = 0; i < 60; ++i) {
    depth.inputs.row(i) << -0.7 + 0.01 * i, -0.1 - 0.002 * i;
    depth.targets(i) = 14.0;
  }
  const SgpModel dm = SgpModel::build(depth, depth.inputs, {20.0, 0.1, 1.0}, 0.05, AzimuthMetric::Planar);
  TrainingSet wide;
  wide.noise_variance = 0.05;
  wide.inputs.resize(121, 2);
  wide.targets.setOnes(121);
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) wide.inputs.row(i * 11 + j) << -0.7 + 0.14 * i, -0.5 + 0.05 * j;
  }
  const SgpModel nm = SgpModel::build(wide, wide.inputs, {1.0, 0.3, 1.0}, 0.05, AzimuthMetric::Planar);
  PlannerConfig cfg;
  cfg.nav_path_check = false;
  const Pose sensor;
  const Lnp known = lnp_at(-0.5, -0.14, 6.0, sensor);
  const Lnp unknown = lnp_at(0.6, -0.14, 6.0, sensor);
  const AngularSpan fov = AngularSpan::centered(deg2rad(87.0), deg2rad(58.0));
  const auto with_depth = assess_navigability({known, unknown}, nm, &dm, fov, cfg);
  REQUIRE(with_depth.size() == 1);
  CHECK(with_depth[0].azimuth == known.azimuth);
  CHECK(assess_navigability({known, unknown}, nm, nullptr, fov, cfg).size() == 2);
}

TEST_CASE("goal cost terms") {
  PlannerConfig cfg;
  const Pose sensor;
  const Vec2 goal(10.0, 0.0);

  SUBCASE("distance only") {
    cfg.k_dst = 1.0;
    cfg.k_dir = 0.0;
    cfg.k_elv = 0.0;
    const Lnp l = lnp_at(0.0, 0.0, 4.0, sensor);
    CHECK(goal_cost(l, goal, cfg) == doctest::Approx((4.0 + 6.0) / (cfg.surface_radius + cfg.reference_distance)));
  }
  SUBCASE("alignment is monotone") {
    const Lnp a = lnp_at(0.0, -0.1, 5.0, sensor);
    Lnp b = a;
    b.azimuth = kPi / 4;
    CHECK(goal_cost(a, goal, cfg) < goal_cost(b, goal, cfg));
  }
  SUBCASE("bounded by one") {
    const Lnp far = lnp_at(kPi - 1e-9, cfg.elevation_min, 1000.0, sensor);
    CHECK(goal_cost(far, goal, cfg) <= 1.0);
    CHECK(goal_cost(far, goal, cfg) >= 0.0);
  }
}

TEST_CASE("scripted grass-mud scene: argmin over 36 LNPs") {
  PlannerConfig cfg;
  cfg.reference_distance = std::hypot(19.0, 12.0);
  const Pose sensor(Vec3(15.0, -4.0, 0.5), -kPi / 2);
  const Vec2 goal(-4.0, -16.0);
  std::vector<Lnp> lnps;
  for (int i = 0; i < 36; ++i) {
    const double az = wrap_angle(deg2rad(10.0 * i));
    const double range = 3.0 + 12.0 * std::abs(std::sin(0.7 * i));
    lnps.push_back(lnp_at(az, deg2rad(-1.0 - (i % 5)), range, sensor));
  }
  const auto sel = select_lnp(lnps, goal, Mode::G, cfg);
  REQUIRE(sel);
  const int expected = brute_force(lnps, goal, Mode::G, cfg);
  REQUIRE(expected >= 0);
  CHECK(sel->azimuth == lnps[expected].azimuth);
  CHECK(sel->cost == doctest::Approx(oracle_goal_cost(lnps[expected], goal, cfg)).epsilon(1e-12));
}

TEST_CASE("VG cost with equal preference and with a camera preference") {
  PlannerConfig cfg;
  const Pose sensor;
  const Vec2 goal(5.0, 0.0);
  Lnp in_fov = lnp_at(deg2rad(20.0), -0.05, 5.0, sensor, Navigability::Navigable);
  Lnp out_fov = lnp_at(deg2rad(-20.0), -0.05, 5.0, sensor, Navigability::OutsideFov);
  const double cg = goal_cost(in_fov, goal, cfg);
  REQUIRE(goal_cost(out_fov, goal, cfg) == doctest::Approx(cg).epsilon(1e-14));

  cfg.k_nav = 0.5;
  CHECK(std::abs(*mode_cost(in_fov, goal, Mode::VG, cfg) - 0.5 * cg) <= 1e-12);
  CHECK(std::abs(*mode_cost(out_fov, goal, Mode::VG, cfg) - 0.5 * cg) <= 1e-12);

  cfg.k_nav = 0.8;
  CHECK(*mode_cost(in_fov, goal, Mode::VG, cfg) < *mode_cost(out_fov, goal, Mode::VG, cfg));
  const auto sel = select_lnp({out_fov, in_fov}, goal, Mode::VG, cfg);
  REQUIRE(sel);
  CHECK(sel->navigability == Navigability::Navigable);
}

TEST_CASE("V mode with every in-FoV candidate non-navigable has nothing viable") {
  PlannerConfig cfg;
  const Pose sensor;
  std::vector<Lnp> lnps{lnp_at(0.1, -0.1, 5, sensor, Navigability::NonNavigable),
                        lnp_at(-0.2, -0.1, 5, sensor, Navigability::NonNavigable),
                        lnp_at(2.0, -0.1, 5, sensor, Navigability::OutsideFov)};
  CHECK_FALSE(select_lnp(lnps, Vec2(5, 0), Mode::V, cfg));
  CHECK(select_lnp(lnps, Vec2(5, 0), Mode::VG, cfg));
  CHECK_FALSE(select_lnp({}, Vec2(5, 0), Mode::G, cfg));
}

TEST_CASE("ties go to the smallest |azimuth| then the smallest azimuth") {
  PlannerConfig cfg;
  cfg.k_dst = 1.0;
  cfg.k_dir = 0.0;
  cfg.k_elv = 0.0;
  Lnp a, b, c;
  a.azimuth = 0.3;
  b.azimuth = -0.3;
  c.azimuth = 0.5;
  for (Lnp* l : {&a, &b, &c}) {
    l->range = 2.0;
    l->world_xyz = Vec3(3.0, 0.0, 0.0);
  }
  const auto sel = select_lnp({c, a, b}, Vec2(5, 0), Mode::G, cfg);
  REQUIRE(sel);
  CHECK(sel->azimuth == -0.3);
}

TEST_CASE("selection properties over random candidate sets") {
  std::mt19937_64 rng(99);
  const AngularSpan fov = AngularSpan::centered(deg2rad(87.0), deg2rad(58.0));
  std::uniform_int_distribution<int> size(1, 360);
  std::uniform_real_distribution<double> w(0.05, 1.0), kn(0.5, 1.0), scale(0.1, 10.0);
  for (int trial = 0; trial < 60; ++trial) {
    const Pose sensor(Vec3(w(rng) * 10, -w(rng) * 10, 0.5), 4.0 * w(rng) - 2.0);
    const Vec2 goal(-4.0, -16.0);
    const auto lnps = random_candidates(rng, size(rng), sensor, fov);
    PlannerConfig cfg;
    cfg.k_dst = w(rng);
    cfg.k_dir = w(rng);
    cfg.k_elv = w(rng);
    cfg.k_nav = kn(rng);
    for (Mode mode : {Mode::G, Mode::V, Mode::VG}) {
      const auto sel = select_lnp(lnps, goal, mode, cfg);
      const int expected = brute_force(lnps, goal, mode, cfg);
      REQUIRE(sel.has_value() == (expected >= 0));
      if (!sel) continue;
      CHECK(sel->azimuth == lnps[expected].azimuth);
      CHECK(sel->range == lnps[expected].range);
      // Masking: a non-navigable candidate never wins while another is viable.
      if (mode != Mode::G) CHECK(sel->navigability != Navigability::NonNavigable);

      // Scale consistency.
      PlannerConfig scaled = cfg;
      const double s = scale(rng);
      scaled.k_dst *= s;
      scaled.k_dir *= s;
      scaled.k_elv *= s;
      const auto sel2 = select_lnp(lnps, goal, mode, scaled);
      REQUIRE(sel2);
      CHECK(sel2->azimuth == sel->azimuth);
    }

    // Raising k_nav never moves the choice from an in-FoV navigable LNP to
    // one outside the camera.
    const auto low = select_lnp(lnps, goal, Mode::VG, cfg);
    if (low && low->navigability == Navigability::Navigable) {
      PlannerConfig higher = cfg;
      higher.k_nav = std::min(1.0, cfg.k_nav + 0.5 * (1.0 - cfg.k_nav) + 0.01);
      const auto high = select_lnp(lnps, goal, Mode::VG, higher);
      REQUIRE(high);
      CHECK(high->navigability == Navigability::Navigable);
    }
  }
}

TEST_CASE("motion command law") {
  PlannerConfig cfg;
  cfg.k_a = 0.2;
  cfg.k_b = 0.5;
  cfg.k_c = 0.5;
  Lnp l;
  l.range = 5.0;
  l.azimuth = 0.0;
  auto cmd = motion_command(l, cfg);
  CHECK(cmd.linear == doctest::Approx(1.0));
  CHECK(cmd.angular == 0.0);

  cfg.k_b = 10.0;
  l.azimuth = kPi;
  cmd = motion_command(l, cfg);
  CHECK(cmd.linear == 0.0);
  CHECK(cmd.angular == doctest::Approx(cfg.k_c * kPi));

  l.azimuth = -0.3;
  CHECK(motion_command(l, cfg).angular < 0.0);
  CHECK(motion_command(l, cfg).angular == cfg.k_c * -0.3);

  l.azimuth = 0.0;
  l.range = 100.0;
  CHECK(motion_command(l, cfg).linear == cfg.v_max);

  // Two selections within one degree give angular rates within k_c degrees.
  Lnp a = l, b = l;
  a.azimuth = 0.2;
  b.azimuth = 0.2 + deg2rad(1.0);
  CHECK(std::abs(motion_command(a, cfg).angular - motion_command(b, cfg).angular) <= cfg.k_c * deg2rad(1.0) + 1e-15);

  const MotionCommand r = recovery_command(cfg);
  CHECK(r.linear == 0.0);
  CHECK(r.angular == doctest::Approx(cfg.k_c * kPi / 2));
}

TEST_CASE("goal capture steers at a nearby goal") {
  PlannerConfig cfg;
  cfg.goal_capture_radius = 3.0;
  const Pose sensor(Vec3(0, 0, 0.5), 0.0);
  const Vec2 goal(2.0, 0.2);
  const double bearing = std::atan2(0.2, 2.0);
  std::vector<Lnp> lnps{lnp_at(bearing + deg2rad(2.0), -0.1, 8.0, sensor, Navigability::Navigable),
                        lnp_at(deg2rad(-40.0), -0.1, 8.0, sensor, Navigability::Navigable)};
  const auto selected = select_lnp(lnps, goal, Mode::VG, cfg);
  const auto captured = capture_goal(lnps, selected, sensor, goal, Mode::VG, cfg);
  REQUIRE(captured);
  CHECK(captured->azimuth == doctest::Approx(bearing));
  CHECK(captured->world_xyz.head<2>() == goal);
  CHECK(captured->range == 8.0);

  SUBCASE("too far away") {
    const Vec2 far_goal(10.0, 1.0);
    const auto c = capture_goal(lnps, selected, sensor, far_goal, Mode::VG, cfg);
    CHECK(c->azimuth == selected->azimuth);
  }
  SUBCASE("candidate stops short of the goal") {
    auto shortened = lnps;
    shortened[0].range = 1.0;
    CHECK(capture_goal(shortened, selected, sensor, goal, Mode::VG, cfg)->azimuth == selected->azimuth);
  }
  SUBCASE("candidate is masked") {
    auto masked = lnps;
    masked[0].navigability = Navigability::NonNavigable;
    const auto sel = select_lnp(masked, goal, Mode::VG, cfg);
    const auto c = capture_goal(masked, sel, sensor, goal, Mode::VG, cfg);
    REQUIRE(c);
    CHECK(c->azimuth == sel->azimuth);
  }
  SUBCASE("disabled") {
    cfg.goal_capture_radius = 0.0;
    CHECK(capture_goal(lnps, selected, sensor, goal, Mode::VG, cfg)->azimuth == selected->azimuth);
  }
}
