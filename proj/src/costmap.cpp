#include "sharenav/costmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sharenav {

namespace {

constexpr double kGeomEpsilon = 1e-9;

// Felzenszwalb-Huttenlocher 1-D squared distance transform, in place.
// Infinite entries are not seeds.
void edt_1d(std::span<double> f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  d.resize(n);
  v.resize(n);
  z.resize(n + 1);
  auto intersect = [&](int q, int r) {
    return ((f[q] + double(q) * q) - (f[r] + double(r) * r)) / (2.0 * (q - r));
  };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) return;  // no seeds; leave the line infinite
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
  std::copy(d.begin(), d.begin() + n, f.begin());
}

// Squared distance, in cells, from every cell to the nearest lethal cell.
std::vector<double> squared_distance_field(const LethalMask& mask) {
  const int w = mask.grid.width;
  const int h = mask.grid.height;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> field(mask.lethal.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    field[k] = mask.lethal[k] ? 0.0 : inf;
  }
  std::vector<double> d;
  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> column(h);
  for (int i = 0; i < w; ++i) {
    for (int j = 0; j < h; ++j) column[j] = field[std::size_t(j) * w + i];
    edt_1d(column, d, v, z);
    for (int j = 0; j < h; ++j) field[std::size_t(j) * w + i] = column[j];
  }
  for (int j = 0; j < h; ++j) {
    edt_1d(std::span<double>(field.data() + std::size_t(j) * w, w), d, v, z);
  }
  return field;
}

// Inclusive cell range whose centers may fall in [lo, hi] along one axis.
std::pair<int, int> cell_span(double lo, double hi, double origin,
                              double resolution, int count) {
  const int a = static_cast<int>(std::floor((lo - origin) / resolution));
  const int b = static_cast<int>(std::ceil((hi - origin) / resolution));
  return {std::max(a, 0), std::min(b, count - 1)};
}

void rasterize(const Shape& shape, double robot_radius, LethalMask& mask) {
  const GridSpec& g = mask.grid;
  Vec2 lo;
  Vec2 hi;
  if (const auto* c = std::get_if<Circle>(&shape)) {
    const double r = c->radius + robot_radius;
    lo = {c->center.x - r, c->center.y - r};
    hi = {c->center.x + r, c->center.y + r};
  } else {
    const auto& pts = std::get<Polygon>(shape).points;
    if (pts.empty()) return;
    lo = hi = pts.front();
    for (const auto& p : pts) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    lo = lo - Vec2{robot_radius, robot_radius};
    hi = hi + Vec2{robot_radius, robot_radius};
  }
  const auto [i0, i1] = cell_span(lo.x, hi.x, g.origin.x, g.resolution, g.width);
  const auto [j0, j1] =
      cell_span(lo.y, hi.y, g.origin.y, g.resolution, g.height);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Cell cell{i, j};
      const Vec2 p = g.center(cell);
      bool hit = false;
      if (const auto* c = std::get_if<Circle>(&shape)) {
        const double r = c->radius + robot_radius;
        hit = (p - c->center).squared_norm() <= r * r + kGeomEpsilon;
      } else {
        hit = signed_distance(shape, p) <= robot_radius + kGeomEpsilon;
      }
      if (hit) mask.lethal[g.index(cell)] = 1;
    }
  }
}

}  // namespace

GridSpec GridSpec::covering(const Bounds& bounds, double resolution) {
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  GridSpec g;
  g.origin = bounds.min;
  g.resolution = resolution;
  g.width = static_cast<int>(
                std::ceil((bounds.max.x - bounds.min.x) / resolution - 1e-9)) +
            1;
  g.height = static_cast<int>(
                 std::ceil((bounds.max.y - bounds.min.y) / resolution - 1e-9)) +
             1;
  return g;
}

std::optional<Cell> GridSpec::cell_at(Vec2 p) const {
  const Cell c{static_cast<int>(std::lround((p.x - origin.x) / resolution)),
               static_cast<int>(std::lround((p.y - origin.y) / resolution))};
  if (!contains(c)) return std::nullopt;
  return c;
}

std::size_t LethalMask::count() const {
  return static_cast<std::size_t>(
      std::count(lethal.begin(), lethal.end(), std::uint8_t{1}));
}

LethalMask inflate_obstacles(std::span<const Shape> shapes,
                             double robot_radius, const GridSpec& grid) {
  if (!(robot_radius > 0.0)) {
    throw std::invalid_argument("robot_radius must be positive");
  }
  LethalMask mask{grid, std::vector<std::uint8_t>(grid.size(), 0)};
  for (const auto& shape : shapes) rasterize(shape, robot_radius, mask);
  return mask;
}

LethalMask inflate_obstacles(const WorldModel& world,
                             const SensedObstacles& sensed,
                             double robot_radius, const GridSpec& grid) {
  std::vector<Shape> shapes;
  for (std::size_t i : sensed.known_obstacles()) {
    shapes.push_back(world.obstacles[i].shape);
  }
  return inflate_obstacles(shapes, robot_radius, grid);
}

void inflate_bounds(LethalMask& mask, const Bounds& bounds,
                    double robot_radius) {
  const GridSpec& g = mask.grid;
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) {
      const Vec2 p = g.center({i, j});
      const double edge = std::min({p.x - bounds.min.x, bounds.max.x - p.x,
                                    p.y - bounds.min.y, bounds.max.y - p.y});
      if (edge <= robot_radius + kGeomEpsilon) mask.lethal[g.index({i, j})] = 1;
    }
  }
}

Costmap compute_obstacle_cost(const LethalMask& mask, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("decay gamma must be > 0");
  Costmap out{mask.grid, std::vector<std::uint8_t>(mask.lethal.size(), 0)};
  const auto field = squared_distance_field(mask);
  for (std::size_t k = 0; k < field.size(); ++k) {
    if (mask.lethal[k]) {
      out.cells[k] = kLethalCost;
    } else if (std::isfinite(field[k])) {
      const double delta = std::sqrt(field[k]) * mask.grid.resolution;
      out.cells[k] =
          static_cast<std::uint8_t>(std::lround(254.0 * std::exp(-gamma * delta)));
    }
  }
  return out;
}

void CostFilterParams::validate() const {
  if (!(w > 0.0)) throw std::invalid_argument("filter width w must be > 0");
  if (!(l > 0.0)) throw std::invalid_argument("filter length l must be > 0");
  if (!(s >= 0.0 && s <= 255.0)) {
    throw std::invalid_argument("filter strength s must be in [0, 255]");
  }
  if (!(p >= 1.0)) throw std::invalid_argument("filter multiplier p must be >= 1");
  if (!std::isfinite(d)) throw std::invalid_argument("filter offset d must be finite");
}

Vec2 fit_direction(const GlobalPath& path, const RobotState& q,
                   double arc_len) {
  if (path.empty()) throw std::invalid_argument("fit_direction on empty path");
  const auto start = closest_point(path, q.position());
  std::vector<Vec2> pts{path.points[start.index]};
  double arc = 0.0;
  for (std::size_t i = start.index + 1; i < path.points.size(); ++i) {
    arc += distance(path.points[i - 1], path.points[i]);
    if (arc > arc_len + kGeomEpsilon) break;
    pts.push_back(path.points[i]);
  }
  const Vec2 progress = pts.back() - pts.front();
  if (pts.size() < 2 || progress.squared_norm() == 0.0) return q.heading();

  Vec2 mean;
  for (const auto& p : pts) mean = mean + p;
  mean = mean * (1.0 / static_cast<double>(pts.size()));
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& p : pts) {
    const Vec2 r = p - mean;
    sxx += r.x * r.x;
    sxy += r.x * r.y;
    syy += r.y * r.y;
  }
  // Major axis of the 2x2 scatter matrix.
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  Vec2 dir{std::cos(angle), std::sin(angle)};
  if (dir.dot(progress) < 0.0) dir = dir * -1.0;
  return dir;
}

CostFrame build_cost_frame(const RobotState& q, double d, Vec2 direction) {
  if (!(std::abs(d) <= 5.0 + kGeomEpsilon)) {
    throw std::invalid_argument("filter offset |d| must not exceed 5 m");
  }
  const double n = direction.norm();
  if (!(n > 0.0)) throw std::invalid_argument("frame direction must be nonzero");
  CostFrame f;
  f.origin = q.position() + q.lateral_axis() * d;
  f.y_axis = direction * (1.0 / n);
  f.x_axis = right_of(f.y_axis);
  return f;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double f_lat(double c_x, double w, double p, int side) {
  const double k = 16.0 / w;
  const double b = w / 4.0;
  const double xi = side < 0 ? -c_x : c_x;
  return p * sigmoid(k * (b + xi)) + sigmoid(k * (b - xi)) - 1.0;
}

double f_lon(double c_y, double l) {
  return 1.0 /
         ((1.0 + std::exp(2.0 * c_y - 2.0 * l)) * (1.0 + std::exp(-4.0 * c_y - 2.0)));
}

int g_ui_local(Vec2 local, const CostFilterParams& params) {
  const int side = params.d > 0.0 ? 1 : (params.d < 0.0 ? -1 : 0);
  const double p = side == 0 ? 1.0 : params.p;
  const double raw =
      params.s * (1.0 - f_lat(local.x, params.w, p, side) * f_lon(local.y, params.l));
  return static_cast<int>(std::lround(std::clamp(raw, 0.0, 255.0)));
}

int g_ui_at(Vec2 world_point, const CostFrame& frame,
            const CostFilterParams& params) {
  return g_ui_local(frame.to_frame(world_point), params);
}

Costmap compose(const Costmap& g_obs,
                const std::optional<UserCostFilter>& filter) {
  if (!filter) return g_obs;
  Costmap out = g_obs;
  const GridSpec& g = g_obs.grid;
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) {
      const std::size_t k = g.index({i, j});
      const int base = g_obs.cells[k];
      if (base == kLethalCost) continue;
      const int ui = g_ui_at(g.center({i, j}), filter->frame, filter->params);
      out.cells[k] = static_cast<std::uint8_t>(
          std::min(255, std::max(base, base + ui)));
    }
  }
  return out;
}

void write_costmap_csv(const Costmap& costmap, std::ostream& out) {
  const GridSpec& g = costmap.grid;
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) {
      if (i) out << ',';
      out << static_cast<int>(costmap.at({i, j}));
    }
    out << '\n';
  }
}

nlohmann::json costmap_header(const Costmap& costmap) {
  const GridSpec& g = costmap.grid;
  return {{"origin", {g.origin.x, g.origin.y}},
          {"resolution", g.resolution},
          {"width", g.width},
          {"height", g.height},
          {"order", "row-major, row j=0 (min y) first"}};
}

}  // namespace sharenav
