#include "sharenav/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sharenav/errors.hpp"

namespace sharenav {

using nlohmann::json;

namespace {

bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

Vec2 read_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw ParseError(what + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json write_point(Vec2 p) { return json::array({p.x, p.y}); }

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where + ": missing \"" + key + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": bad \"" + key + "\": " + e.what());
  }
}

Obstacle read_obstacle(const json& j, std::size_t index) {
  const std::string where = "obstacles[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ParseError(where + ": expected object");
  Obstacle o;
  o.id = j.value("id", where);
  o.a_priori = j.value("a_priori", true);
  const auto kind = required<std::string>(j, "shape", where);
  if (kind == "circle") {
    if (!j.contains("center")) throw ParseError(where + ": missing \"center\"");
    o.shape = Circle{read_point(j["center"], where + ".center"),
                     required<double>(j, "radius", where)};
  } else if (kind == "polygon") {
    const auto& pts = j.find("points");
    if (pts == j.end() || !pts->is_array()) {
      throw ParseError(where + ": polygon needs \"points\"");
    }
    Polygon poly;
    for (const auto& p : *pts) poly.points.push_back(read_point(p, where));
    o.shape = std::move(poly);
  } else {
    throw ParseError(where + ": unknown shape \"" + kind + "\"");
  }
  return o;
}

json write_obstacle(const Obstacle& o) {
  json j;
  j["id"] = o.id;
  if (const auto* c = std::get_if<Circle>(&o.shape)) {
    j["shape"] = "circle";
    j["center"] = write_point(c->center);
    j["radius"] = c->radius;
  } else {
    const auto& poly = std::get<Polygon>(o.shape);
    j["shape"] = "polygon";
    j["points"] = json::array();
    for (const auto& p : poly.points) j["points"].push_back(write_point(p));
  }
  j["a_priori"] = o.a_priori;
  return j;
}

Pool read_pool(const json& j, std::size_t index) {
  const std::string where = "pools[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ParseError(where + ": expected object");
  Pool p;
  p.id = j.value("id", where);
  if (!j.contains("center")) throw ParseError(where + ": missing \"center\"");
  p.center = read_point(j["center"], where + ".center");
  p.radius = required<double>(j, "radius", where);
  p.intensity = j.value("intensity", 1.0);
  p.fade = j.value("fade", 3.0);
  return p;
}

bool shape_within(const Shape& shape, const Bounds& b) {
  if (const auto* c = std::get_if<Circle>(&shape)) {
    return c->center.x - c->radius >= b.min.x &&
           c->center.x + c->radius <= b.max.x &&
           c->center.y - c->radius >= b.min.y &&
           c->center.y + c->radius <= b.max.y;
  }
  const auto& poly = std::get<Polygon>(shape);
  return std::all_of(poly.points.begin(), poly.points.end(),
                     [&](Vec2 p) { return b.contains(p); });
}

}  // namespace

double signed_distance(const Shape& shape, Vec2 p) {
  if (const auto* c = std::get_if<Circle>(&shape)) {
    return distance(p, c->center) - c->radius;
  }
  const auto& pts = std::get<Polygon>(shape).points;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
    d = std::min(d, segment_distance(p, pts[j], pts[i]));
  }
  return point_in_polygon(pts, p) ? -d : d;
}

void validate(const WorldModel& world) {
  const Bounds& b = world.bounds;
  if (!(b.max.x > b.min.x && b.max.y > b.min.y)) {
    throw ValidationError("bounds", "max must exceed min");
  }
  if (!b.contains(world.start.position())) {
    throw ValidationError("start", "outside world bounds");
  }
  if (!b.contains(world.goal)) {
    throw ValidationError("goal", "outside world bounds");
  }
  std::set<std::string> ids;
  for (const auto& o : world.obstacles) {
    if (!ids.insert(o.id).second) {
      throw ValidationError(o.id, "duplicate id");
    }
    if (const auto* c = std::get_if<Circle>(&o.shape)) {
      if (!(c->radius >= 0.0)) throw ValidationError(o.id, "negative radius");
    } else if (std::get<Polygon>(o.shape).points.size() < 3) {
      throw ValidationError(o.id, "polygon needs at least 3 points");
    }
    if (!shape_within(o.shape, b)) {
      throw ValidationError(o.id, "shape extends outside world bounds");
    }
    if (signed_distance(o.shape, world.start.position()) <= 0.0) {
      throw ValidationError(o.id, "start lies inside this obstacle");
    }
    if (signed_distance(o.shape, world.goal) <= 0.0) {
      throw ValidationError(o.id, "goal lies inside this obstacle");
    }
  }
  for (const auto& p : world.pools) {
    if (!ids.insert(p.id).second) throw ValidationError(p.id, "duplicate id");
    if (!(p.radius > 0.0)) throw ValidationError(p.id, "radius must be > 0");
    if (!(p.fade > 0.0)) throw ValidationError(p.id, "fade must be > 0");
    if (!(p.intensity >= 0.0)) {
      throw ValidationError(p.id, "intensity must be >= 0");
    }
    if (!b.contains(p.center)) {
      throw ValidationError(p.id, "center outside world bounds");
    }
  }
}

namespace {

WorldModel parse_world(const json& doc) {
  WorldModel w;
  w.name = doc.value("name", std::string{});
  if (!doc.contains("bounds") || !doc["bounds"].is_object()) {
    throw ParseError("world: missing \"bounds\" object");
  }
  const auto& bounds = doc["bounds"];
  if (!bounds.contains("min") || !bounds.contains("max")) {
    throw ParseError("bounds: needs \"min\" and \"max\"");
  }
  w.bounds = {read_point(bounds["min"], "bounds.min"),
              read_point(bounds["max"], "bounds.max")};
  if (!doc.contains("start") || !doc["start"].is_object()) {
    throw ParseError("world: missing \"start\" object");
  }
  const auto& start = doc["start"];
  w.start.x = required<double>(start, "x", "start");
  w.start.y = required<double>(start, "y", "start");
  w.start.theta = wrap_angle(start.value("theta", 0.0));
  if (!doc.contains("goal")) throw ParseError("world: missing \"goal\"");
  w.goal = read_point(doc["goal"], "goal");
  if (doc.contains("obstacles")) {
    if (!doc["obstacles"].is_array()) {
      throw ParseError("world: \"obstacles\" must be an array");
    }
    for (std::size_t i = 0; i < doc["obstacles"].size(); ++i) {
      w.obstacles.push_back(read_obstacle(doc["obstacles"][i], i));
    }
  }
  if (doc.contains("pools")) {
    if (!doc["pools"].is_array()) {
      throw ParseError("world: \"pools\" must be an array");
    }
    for (std::size_t i = 0; i < doc["pools"].size(); ++i) {
      w.pools.push_back(read_pool(doc["pools"][i], i));
    }
  }
  return w;
}

}  // namespace

WorldModel world_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("world: expected a JSON object");
  WorldModel w;
  try {
    w = parse_world(doc);
  } catch (const json::exception& e) {
    // optional keys read with value() still throw on a wrong type
    throw ParseError(std::string("world: ") + e.what());
  }
  validate(w);
  return w;
}

json world_to_json(const WorldModel& world) {
  json doc;
  doc["name"] = world.name;
  doc["bounds"] = {{"min", write_point(world.bounds.min)},
                   {"max", write_point(world.bounds.max)}};
  doc["start"] = {{"x", world.start.x},
                  {"y", world.start.y},
                  {"theta", world.start.theta}};
  doc["goal"] = write_point(world.goal);
  doc["obstacles"] = json::array();
  for (const auto& o : world.obstacles) {
    doc["obstacles"].push_back(write_obstacle(o));
  }
  doc["pools"] = json::array();
  for (const auto& p : world.pools) {
    doc["pools"].push_back({{"id", p.id},
                            {"center", write_point(p.center)},
                            {"radius", p.radius},
                            {"intensity", p.intensity},
                            {"fade", p.fade}});
  }
  return doc;
}

WorldModel load_world(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("world: ") + e.what());
  }
  return world_from_json(doc);
}

WorldModel load_world_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_world(ss.str());
}

double radiation_at(const WorldModel& world, Vec2 p) {
  double total = 0.0;
  for (const auto& pool : world.pools) {
    const double outside =
        std::max(0.0, distance(p, pool.center) - pool.radius);
    total += pool.intensity * std::clamp(1.0 - outside / pool.fade, 0.0, 1.0);
  }
  return total;
}

std::optional<double> closest_pool_distance(const WorldModel& world, Vec2 p) {
  std::optional<double> best;
  for (const auto& pool : world.pools) {
    const double d = std::max(0.0, distance(p, pool.center) - pool.radius);
    if (!best || d < *best) best = d;
  }
  return best;
}

std::optional<double> obstacle_clearance(const WorldModel& world, Vec2 p) {
  std::optional<double> best;
  for (const auto& o : world.obstacles) {
    const double d = signed_distance(o.shape, p);
    if (!best || d < *best) best = d;
  }
  return best;
}

SensedObstacles SensedObstacles::initial(const WorldModel& world,
                                         double sensor_range) {
  if (!(sensor_range > 0.0)) {
    throw std::invalid_argument("sensor_range must be positive");
  }
  SensedObstacles s;
  s.sensor_range_ = sensor_range;
  s.obstacles_.resize(world.obstacles.size());
  for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
    s.obstacles_[i] = world.obstacles[i].a_priori;
  }
  // Pools are never on the a-priori map.
  s.pools_.assign(world.pools.size(), false);
  return s;
}

SensedObstacles SensedObstacles::all(const WorldModel& world,
                                     double sensor_range) {
  auto s = initial(world, sensor_range);
  s.obstacles_.assign(world.obstacles.size(), true);
  s.pools_.assign(world.pools.size(), true);
  return s;
}

std::size_t SensedObstacles::size() const {
  return static_cast<std::size_t>(
      std::count(obstacles_.begin(), obstacles_.end(), true) +
      std::count(pools_.begin(), pools_.end(), true));
}

std::vector<std::size_t> SensedObstacles::known_obstacles() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    if (obstacles_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SensedObstacles::known_pools() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pools_.size(); ++i) {
    if (pools_[i]) out.push_back(i);
  }
  return out;
}

SensedObstacles sense(const WorldModel& world, const RobotState& q,
                      const SensedObstacles& known) {
  SensedObstacles next = known;
  next.obstacles_.resize(world.obstacles.size(), false);
  next.pools_.resize(world.pools.size(), false);
  const Vec2 p = q.position();
  const double range = known.sensor_range_;
  for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
    if (world.obstacles[i].a_priori ||
        signed_distance(world.obstacles[i].shape, p) <= range) {
      next.obstacles_[i] = true;
    }
  }
  for (std::size_t i = 0; i < world.pools.size(); ++i) {
    const auto& pool = world.pools[i];
    if (distance(p, pool.center) - pool.radius <= range) next.pools_[i] = true;
  }
  return next;
}

}  // namespace sharenav
