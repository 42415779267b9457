#include "vgnav/errors.hpp"
#include "vgnav/simworld.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace vgnav {

namespace {

struct Rect {
  double x0, y0, x1, y1;

  [[nodiscard]] double distance(const Vec2& p) const {
    const double dx = std::max({x0 - p.x(), 0.0, p.x() - x1});
    const double dy = std::max({y0 - p.y(), 0.0, p.y() - y1});
    return std::hypot(dx, dy);
  }
  [[nodiscard]] bool contains(const Vec2& p) const {
    return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
  }
};

World square_world(double half_extent, double cell_size, std::vector<std::string> classes) {
  const int nodes = static_cast<int>(std::lround(2.0 * half_extent / cell_size)) + 1;
  World w(nodes, nodes, cell_size, Vec2(-half_extent, -half_extent));
  w.class_names = std::move(classes);
  return w;
}

// Flat-topped hill over `core` whose flanks fall off linearly over `run`
// metres. Returns the footprint outline: the core grown by `run` plus one
// cell (the reach of bilinear interpolation) with rounded corners.
Polygon add_mesa(World& w, const Rect& core, double height, double run, std::string name) {
  for (int j = 0; j < w.rows(); ++j) {
    for (int i = 0; i < w.cols(); ++i) {
      const double d = core.distance(w.node_position(i, j));
      const double h = height * std::clamp(1.0 - d / run, 0.0, 1.0);
      w.set_node_height(i, j, std::max(w.node_height(i, j), h));
    }
  }
  Polygon poly{std::move(name), {}};
  const int arc = 8;
  const Vec2 corners[4] = {{core.x1, core.y0}, {core.x1, core.y1}, {core.x0, core.y1}, {core.x0, core.y0}};
  for (int c = 0; c < 4; ++c) {
    const double start = -kPi / 2 + c * kPi / 2;
    for (int k = 0; k <= arc; ++k) {
      const double a = start + (kPi / 2) * k / arc;
      poly.vertices.push_back(corners[c] + (run + w.cell_size()) * Vec2(std::cos(a), std::sin(a)));
    }
  }
  return poly;
}

Polygon paint_rect(World& w, const Rect& r, int cls, std::string name) {
  for (int j = 0; j < w.rows(); ++j) {
    for (int i = 0; i < w.cols(); ++i) {
      if (r.contains(w.node_position(i, j))) w.set_node_class(i, j, cls);
    }
  }
  return {std::move(name), {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}}};
}

void add_box(World& w, const Rect& r, double height) {
  for (int j = 0; j < w.rows(); ++j) {
    for (int i = 0; i < w.cols(); ++i) {
      if (r.contains(w.node_position(i, j))) w.set_node_height(i, j, height);
    }
  }
}

void place(World& w, Vec2 spawn, double heading, Vec2 goal) {
  w.finalize();
  w.spawn = Pose(Vec3(spawn.x(), spawn.y(), w.height_at(spawn)), heading);
  w.goal = goal;
}

}  // namespace

World make_flat_world(double half_extent, double cell_size) {
  World w = square_world(half_extent, cell_size, {"grass"});
  place(w, Vec2::Zero(), 0.0, Vec2(5.0, 0.0));
  return w;
}

// 40 m square of grass. A steep grass mesa faces the spawn a few metres to
// the south. A mud patch runs west from the foot of the mesa and crosses the
// straight line to the goal.
World make_grass_mud_hsg_world() {
  World w = square_world(20.0, 0.25, {"grass", "mud"});
  const double height = 2.5;
  const double run = 3.0;
  w.regions.push_back(add_mesa(w, {15.0, -14.5, 26.0, -12.5}, height, run, "hsg"));
  w.regions.push_back(paint_rect(w, {-1.0, -16.0, 13.0, -8.0}, w.class_index("mud"), "mud"));
  place(w, Vec2(15.0, -4.0), -kPi / 2, Vec2(-4.0, -16.0));
  return w;
}

// Asphalt yard with an L-shaped grass patch wrapping the front and right of
// the spawn. A table stands against the inner edge of the grass, to the right
// of the way out towards the goal.
World make_grass_corner_table_world() {
  World w = square_world(10.0, 0.25, {"asphalt", "grass"});
  const int grass = w.class_index("grass");
  w.regions.push_back(paint_rect(w, {2.0, -10.0, 10.0, 10.0}, grass, "grass_front"));
  w.regions.push_back(paint_rect(w, {-10.0, -10.0, 2.0, -2.0}, grass, "grass_side"));
  const Rect table{0.4, 3.6, 1.8, 4.4};
  add_box(w, table, 1.2);
  w.regions.push_back({"table", {{table.x0, table.y0}, {table.x1, table.y0}, {table.x1, table.y1}, {table.x0, table.y1}}});
  place(w, Vec2(0.0, 0.0), 0.0, Vec2(-2.5, 8.0));
  return w;
}

std::vector<std::string> world_generator_names() {
  return {"flat", "grass_mud_hsg", "grass_corner_table"};
}

World make_world(const std::string& name) {
  if (name == "flat") return make_flat_world();
  if (name == "grass_mud_hsg") return make_grass_mud_hsg_world();
  if (name == "grass_corner_table") return make_grass_corner_table_world();
  throw ConfigError(fmt::format("unknown world generator '{}'", name));
}

}  // namespace vgnav
