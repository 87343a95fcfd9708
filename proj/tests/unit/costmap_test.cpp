#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <doctest.h>

#include "sharenav/costmap.hpp"
#include "support/oracles.hpp"

using namespace sharenav;
using doctest::Approx;

namespace {

GridSpec grid(int w, int h, double res = 0.1, Vec2 origin = {0, 0}) {
  return {origin, res, w, h};
}

// Dense straight path along `dir` from `from`, one vertex per 0.1 m.
GlobalPath line_path(Vec2 from, Vec2 dir, double length) {
  GlobalPath p;
  for (int k = 0; k * 0.1 <= length + 1e-9; ++k) p.points.push_back(from + dir * (k * 0.1));
  return p;
}

}  // namespace

TEST_SUITE("costmap") {

TEST_CASE("grid covering bounds") {
  const auto g = GridSpec::covering({{0, 0}, {30, 50}}, 0.1);
  CHECK(g.width == 301);
  CHECK(g.height == 501);
  CHECK(g.center({300, 500}).x == Approx(30.0));
  CHECK(g.cell_at({15.0, 2.5}) == Cell{150, 25});
  CHECK_FALSE(g.cell_at({-1, 0}).has_value());
}

TEST_CASE("empty obstacle set gives an empty mask") {
  const auto m = inflate_obstacles(std::span<const Shape>{}, 0.35, grid(20, 20));
  CHECK(m.count() == 0);
}

TEST_CASE("point obstacle inflates to a 37-cell disk") {
  const std::vector<Shape> shapes{Circle{{1.0, 1.0}, 0.0}};
  const auto m = inflate_obstacles(shapes, 0.35, grid(21, 21));
  CHECK(m.count() == 37);
}

TEST_CASE("inflation matches a brute-force distance check") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.5, 5.5), r(0.05, 0.6);
  const auto g = grid(60, 60);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Shape> shapes;
    std::vector<std::vector<std::pair<double, double>>> polys;
    std::vector<std::array<double, 3>> circles;
    for (int k = 0; k < 3; ++k) {
      const double cx = u(rng), cy = u(rng), rad = r(rng);
      shapes.push_back(Circle{{cx, cy}, rad});
      circles.push_back({cx, cy, rad});
    }
    const double x0 = u(rng), y0 = u(rng);
    std::vector<std::pair<double, double>> tri{
        {x0, y0}, {x0 + 0.8, y0 + 0.1}, {x0 + 0.3, y0 + 0.9}};
    polys.push_back(tri);
    shapes.push_back(Polygon{{{tri[0].first, tri[0].second},
                              {tri[1].first, tri[1].second},
                              {tri[2].first, tri[2].second}}});
    const double radius = 0.35;
    const auto m = inflate_obstacles(shapes, radius, g);
    for (int j = 0; j < g.height; ++j) {
      for (int i = 0; i < g.width; ++i) {
        const double px = i * 0.1, py = j * 0.1;
        bool want = false;
        for (auto [cx, cy, rad] : circles) {
          want |= std::hypot(px - cx, py - cy) - rad <= radius;
        }
        for (const auto& poly : polys) {
          double d = 1e9;
          for (std::size_t e = 0; e < poly.size(); ++e) {
            const auto [ax, ay] = poly[e];
            const auto [bx, by] = poly[(e + 1) % poly.size()];
            d = std::min(d, oracle::seg_dist(px, py, ax, ay, bx, by));
          }
          want |= oracle::inside(poly, px, py) || d <= radius;
        }
        REQUIRE(m.at({i, j}) == want);
      }
    }
  }
}

TEST_CASE("inflating a union equals the union of inflations") {
  const auto g = grid(40, 40);
  const std::vector<Shape> a{Circle{{1.5, 2.0}, 0.4}};
  const std::vector<Shape> b{Circle{{1.9, 2.1}, 0.5}};
  const std::vector<Shape> ab{a[0], b[0]};
  const auto ma = inflate_obstacles(a, 0.35, g);
  const auto mb = inflate_obstacles(b, 0.35, g);
  const auto mab = inflate_obstacles(ab, 0.35, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    REQUIRE(mab.lethal[k] == (ma.lethal[k] | mb.lethal[k]));
  }
}

TEST_CASE("bounds act as an inflated wall") {
  auto m = inflate_obstacles(std::span<const Shape>{}, 0.35, grid(31, 31));
  inflate_bounds(m, {{0, 0}, {3, 3}}, 0.35);
  CHECK(m.at({0, 15}));
  CHECK(m.at({3, 15}));
  CHECK_FALSE(m.at({4, 15}));
  CHECK(m.at({30, 15}));
  CHECK_FALSE(m.at({15, 15}));
}

TEST_CASE("obstacle cost decay") {
  const auto g = grid(50, 50);
  LethalMask m{g, std::vector<std::uint8_t>(g.size(), 0)};
  m.lethal[g.index({10, 10})] = 1;
  const auto c = compute_obstacle_cost(m, 2.0);
  CHECK(c.at({10, 10}) == 255);
  CHECK(c.at({15, 10}) == 93);  // 0.5 m away: round(254 e^-1)
  CHECK(c.at({10, 15}) == 93);
  CHECK(c.at({11, 10}) == static_cast<int>(std::lround(254 * std::exp(-0.2))));

  SUBCASE("no lethal cells: everything decays to zero") {
    LethalMask empty{g, std::vector<std::uint8_t>(g.size(), 0)};
    const auto z = compute_obstacle_cost(empty, 2.0);
    for (auto v : z.cells) REQUIRE(v == 0);
  }
}

TEST_CASE("obstacle cost matches a brute-force nearest-lethal search") {
  std::mt19937 rng(11);
  const auto g = grid(37, 29, 0.1, {1.0, -2.0});
  for (int trial = 0; trial < 10; ++trial) {
    LethalMask m{g, std::vector<std::uint8_t>(g.size(), 0)};
    std::bernoulli_distribution coin(0.03);
    for (auto& v : m.lethal) v = coin(rng) ? 1 : 0;
    const auto c = compute_obstacle_cost(m, 2.0);
    for (int j = 0; j < g.height; ++j) {
      for (int i = 0; i < g.width; ++i) {
        long double best = INFINITY;
        for (int jj = 0; jj < g.height; ++jj) {
          for (int ii = 0; ii < g.width; ++ii) {
            if (m.at({ii, jj})) {
              best = std::min(best, std::hypot((long double)(ii - i) * 0.1L,
                                               (long double)(jj - j) * 0.1L));
            }
          }
        }
        const int want = m.at({i, j})
                             ? 255
                             : (std::isinf(best)
                                    ? 0
                                    : static_cast<int>(std::lround(
                                          254.0L * std::exp(-2.0L * best))));
        REQUIRE(c.at({i, j}) == want);
      }
    }
  }
}

TEST_CASE("filter parameter validation") {
  CHECK_NOTHROW(CostFilterParams{}.validate());
  CHECK_THROWS_AS((CostFilterParams{0, 0, 5, 100, 1.2}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((CostFilterParams{0, 3, 0, 100, 1.2}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((CostFilterParams{0, 3, 5, 256, 1.2}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((CostFilterParams{0, 3, 5, 100, 0.9}.validate()), std::invalid_argument);
}

TEST_CASE("fit direction") {
  const RobotState q{0, 0, 0};
  SUBCASE("straight along +x") {
    const auto d = fit_direction(line_path({0, 0}, {1, 0}, 10), q);
    CHECK(d.x == Approx(1.0));
    CHECK(std::abs(d.y) < 1e-12);
  }
  SUBCASE("straight along +y") {
    const auto d = fit_direction(line_path({0, 0}, {0, 1}, 10), q);
    CHECK(std::abs(d.x) < 1e-12);
    CHECK(d.y == Approx(1.0));
  }
  SUBCASE("sign follows the path, not the heading") {
    const auto d = fit_direction(line_path({0, 0}, {-1, 0}, 10), q);
    CHECK(d.x == Approx(-1.0));
  }
  SUBCASE("L-shaped path: direction of the first leg") {
    auto p = line_path({0, 0}, {1, 0}, 7);
    for (int k = 1; k <= 50; ++k) p.points.push_back({7.0, k * 0.1});
    const auto d = fit_direction(p, q);
    CHECK(d.x == Approx(1.0));
    CHECK(std::abs(d.y) < 1e-9);
  }
  SUBCASE("bent path agrees with a principal-axis oracle") {
    auto p = line_path({0, 0}, {1, 0}, 3);
    for (int k = 1; k <= 40; ++k) p.points.push_back({3.0 + k * 0.1, k * 0.1});
    const RobotState r{0.02, 0.01, 0.3};
    const auto d = fit_direction(p, r);
    // Oracle: points from the closest vertex spanning 5 m of arc.
    std::vector<std::pair<double, double>> pts;
    double arc = 0;
    for (std::size_t k = 0; k < p.points.size(); ++k) {
      if (k > 0) arc += distance(p.points[k - 1], p.points[k]);
      if (arc > 5.0 + 1e-9) break;
      pts.push_back({p.points[k].x, p.points[k].y});
    }
    const double a = oracle::principal_angle(pts);
    CHECK(std::abs(d.cross({std::cos(a), std::sin(a)})) < 1e-9);
    CHECK(d.x > 0);
  }
  SUBCASE("single-point path falls back to the heading") {
    GlobalPath p;
    p.points.push_back({0, 0});
    const auto d = fit_direction(p, RobotState{0, 0, std::numbers::pi / 2});
    CHECK(std::abs(d.x) < 1e-12);
    CHECK(d.y == Approx(1.0));
  }
}

TEST_CASE("cost frame") {
  SUBCASE("d = 0 puts the origin at the robot") {
    const auto f = build_cost_frame({3, 4, 1.0}, 0, {0, 1});
    CHECK(f.origin == Vec2{3, 4});
  }
  SUBCASE("positive d is to the right of the heading") {
    const auto f = build_cost_frame({0, 0, 0}, 2, {1, 0});
    CHECK(f.origin.x == Approx(0.0));
    CHECK(f.origin.y == Approx(-2.0));
    CHECK(f.y_axis == Vec2{1, 0});
    CHECK(f.x_axis.x == Approx(0.0));
    CHECK(f.x_axis.y == Approx(-1.0));
  }
  SUBCASE("negative d mirrors across the heading line") {
    const RobotState q{1, 2, 0.7};
    const auto a = build_cost_frame(q, 1.7, q.heading());
    const auto b = build_cost_frame(q, -1.7, q.heading());
    const Vec2 mid = (a.origin + b.origin) * 0.5;
    CHECK(mid.x == Approx(1.0));
    CHECK(mid.y == Approx(2.0));
    CHECK(std::abs((a.origin - q.position()).dot(q.heading())) < 1e-12);
  }
  SUBCASE("axes are orthonormal") {
    const auto f = build_cost_frame({0, 0, 0.4}, 1, Vec2{3, 4} * 0.2);
    CHECK(f.x_axis.norm() == Approx(1.0));
    CHECK(f.y_axis.norm() == Approx(1.0));
    CHECK(std::abs(f.x_axis.dot(f.y_axis)) < 1e-15);
  }
  CHECK_THROWS_AS(build_cost_frame({0, 0, 0}, 5.5, {1, 0}), std::invalid_argument);
}

TEST_CASE("lateral profile") {
  CHECK(f_lat(0, 3, 1, 1) == Approx(0.964027580075816883946).epsilon(1e-14));
  CHECK(std::abs(f_lat(10, 3, 1, 1)) < 1e-10);
  CHECK(std::abs(f_lat(-10, 3, 1, 1)) < 1e-10);
  CHECK(f_lat(50, 3, 1.2, 1) == Approx(0.2).epsilon(1e-12));
  CHECK(f_lat(-50, 3, 1.2, -1) == Approx(0.2).epsilon(1e-12));
  CHECK(std::abs(f_lat(-50, 3, 1.2, 1)) < 1e-10);
}

TEST_CASE("longitudinal profile") {
  CHECK(std::abs(f_lon(5, 5) - 0.5) <= 1e-9);
  CHECK(f_lon(2.5, 5) == Approx(0.993301046023157595).epsilon(1e-14));
  CHECK(f_lon(-5, 5) < 1e-7);
  CHECK(f_lon(-5, 5) == Approx(1.52299794813690e-8).epsilon(1e-10));
}

TEST_CASE("user-input cost") {
  const CostFilterParams p1{0, 3, 5, 100, 1.0};
  CHECK(g_ui_local({0, 2.5}, p1) == 4);
  CHECK(g_ui_local({0, -20}, p1) == 100);
  CHECK(g_ui_local({0, 40}, p1) == 100);
  CHECK(g_ui_local({1.3, 2.2}, CostFilterParams{0, 3, 5, 0, 1.0}) == 0);
  CHECK(g_ui_local({0, 2.5}, CostFilterParams{0, 3, 5, 255, 1.0}) <= 255);
}

TEST_CASE("valley property") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> cy(0.0, 5.0);
  for (double p : {1.0, 1.2, 1.5}) {
    for (double d : {-2.0, 0.0, 2.0}) {
      const CostFilterParams prm{d, 3, 5, 100, p};
      const double side = d < 0 ? -1 : 1;
      for (int k = 0; k < 200; ++k) {
        const double y = cy(rng);
        const int center = g_ui_local({0, y}, prm);
        const int off = g_ui_local({-side * prm.w, y}, prm);
        REQUIRE(off - center >= 0.8 * prm.s * f_lon(y, prm.l) - 1.0);
        REQUIRE(center < off);
      }
    }
  }
}

TEST_CASE("side preference") {
  for (double y = 0.0; y <= 5.0; y += 0.25) {
    for (double d : {1.0, -1.0}) {
      const CostFilterParams prm{d, 3, 5, 100, 1.2};
      const double side = d > 0 ? 1 : -1;
      REQUIRE(g_ui_local({side * 2 * prm.w, y}, prm) <
              g_ui_local({-side * 2 * prm.w, y}, prm));
    }
  }
}

TEST_CASE("p = 1 is symmetric in c_x") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> x(0, 6), y(-2, 8);
  for (int k = 0; k < 2000; ++k) {
    const double a = x(rng), b = y(rng);
    for (double d : {-1.0, 0.0, 1.0}) {
      const CostFilterParams prm{d, 3, 5, 100, 1.0};
      REQUIRE(std::abs(g_ui_local({a, b}, prm) - g_ui_local({-a, b}, prm)) <= 1);
    }
  }
}

TEST_CASE("frame evaluation equals local evaluation") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-6, 6), th(-3, 3);
  for (int k = 0; k < 2000; ++k) {
    const RobotState q{u(rng), u(rng), th(rng)};
    const double d = u(rng) * 0.8;
    const auto frame = build_cost_frame(q, d, q.heading());
    const CostFilterParams prm{d, 3, 5, 100, 1.2};
    const Vec2 local{u(rng), u(rng)};
    const Vec2 world = frame.origin + frame.x_axis * local.x + frame.y_axis * local.y;
    const Vec2 back = frame.to_frame(world);
    REQUIRE(g_ui_at(world, frame, prm) == g_ui_local(back, prm));
    REQUIRE(std::abs(back.x - local.x) < 1e-9);
    REQUIRE(std::abs(back.y - local.y) < 1e-9);
  }
}

TEST_CASE("compose") {
  const auto g = grid(3, 1);
  Costmap obs{g, {255, 0, 200}};
  SUBCASE("no filter returns g_obs") { CHECK(compose(obs, std::nullopt) == obs); }
  SUBCASE("saturation and addition") {
    // Frame far away: f_lon = 0 everywhere, so g_ui = s.
    UserCostFilter f{build_cost_frame({0, 100, 0}, 0, {1, 0}), {0, 3, 5, 100, 1.2}};
    const auto c = compose(obs, f);
    CHECK(c.cells[0] == 255);
    CHECK(c.cells[1] == 100);
    CHECK(c.cells[2] == 255);
  }
  SUBCASE("every composed cell stays in range over random maps") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> v(0, 255);
    const auto big = grid(80, 80);
    Costmap m{big, std::vector<std::uint8_t>(big.size())};
    for (auto& c : m.cells) c = static_cast<std::uint8_t>(v(rng));
    UserCostFilter f{build_cost_frame({4, 4, 0.3}, 2.0, {1, 0}), {2, 3, 5, 255, 2.0}};
    const auto c = compose(m, f);
    for (std::size_t k = 0; k < c.cells.size(); ++k) {
      REQUIRE(c.cells[k] >= m.cells[k]);
      if (m.cells[k] == 255) REQUIRE(c.cells[k] == 255);
      REQUIRE(c.cells[k] ==
              std::min(255, m.cells[k] + g_ui_at(big.center(big.cell_of(k)), f.frame,
                                                 f.params)));
    }
  }
}

TEST_CASE("CSV dump") {
  const auto g = grid(3, 2, 0.5, {1, 2});
  Costmap m{g, {0, 1, 2, 10, 255, 7}};
  std::ostringstream out;
  write_costmap_csv(m, out);
  CHECK(out.str() == "0,1,2\n10,255,7\n");
  const auto h = costmap_header(m);
  CHECK(h["width"] == 3);
  CHECK(h["height"] == 2);
  CHECK(h["resolution"] == 0.5);
  CHECK(h["origin"][0] == 1.0);
  CHECK(h["origin"][1] == 2.0);
}

}
