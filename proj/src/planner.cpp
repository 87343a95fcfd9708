#include "sharenav/planner.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "sharenav/errors.hpp"

namespace sharenav {

namespace {

struct Step {
  int di;
  int dj;
  bool diagonal;
};

constexpr std::array<Step, 8> kSteps{{{1, 0, false},
                                      {-1, 0, false},
                                      {0, 1, false},
                                      {0, -1, false},
                                      {1, 1, true},
                                      {1, -1, true},
                                      {-1, 1, true},
                                      {-1, -1, true}}};

// Octile distance scaled to the cheapest possible edge (g = 0).
std::int64_t heuristic(Cell a, Cell b) {
  const std::int64_t dx = std::abs(a.i - b.i);
  const std::int64_t dy = std::abs(a.j - b.j);
  const std::int64_t diag = std::min(dx, dy);
  const std::int64_t straight = std::max(dx, dy) - diag;
  return 255 * (diag * kDiagonalUnits + straight * kStraightUnits);
}

Cell checked_cell(const Costmap& cm, Vec2 p, const char* what) {
  const auto c = cm.grid.cell_at(p);
  if (!c) throw std::invalid_argument(std::string(what) + " is off the grid");
  if (cm.lethal(*c)) {
    throw std::invalid_argument(std::string(what) + " is in a lethal cell");
  }
  return *c;
}

}  // namespace

PlanResult plan(const PlanRequest& req, const PlannerConfig& config) {
  if (req.costmap == nullptr) throw std::invalid_argument("plan: no costmap");
  if (config.cost_weight < 0) {
    throw std::invalid_argument("plan: cost_weight must be >= 0");
  }
  const Costmap& cm = *req.costmap;
  const GridSpec& grid = cm.grid;
  const Cell start = checked_cell(cm, req.start, "start");
  const Cell goal = checked_cell(cm, req.goal, "goal");

  constexpr std::int64_t unreached = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> g(grid.size(), unreached);
  std::vector<std::int32_t> parent(grid.size(), -1);
  std::vector<std::uint8_t> closed(grid.size(), 0);

  using Entry = std::tuple<std::int64_t, std::int64_t, std::size_t>;  // f, h, idx
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const std::size_t start_idx = grid.index(start);
  const std::size_t goal_idx = grid.index(goal);
  g[start_idx] = 0;
  const std::int64_t h0 = heuristic(start, goal);
  open.emplace(h0, h0, start_idx);

  PlanResult result;
  while (!open.empty()) {
    const auto [f, h, idx] = open.top();
    open.pop();
    if (closed[idx]) continue;
    closed[idx] = 1;
    ++result.expanded;
    if (idx == goal_idx) break;
    const Cell c = grid.cell_of(idx);
    for (const Step& s : kSteps) {
      const Cell n{c.i + s.di, c.j + s.dj};
      if (!grid.contains(n)) continue;
      const std::size_t nidx = grid.index(n);
      if (closed[nidx] || cm.cells[nidx] == kLethalCost) continue;
      const std::int64_t cand =
          g[idx] + edge_cost_units(s.diagonal, cm.cells[nidx], config.cost_weight);
      if (cand < g[nidx]) {
        g[nidx] = cand;
        parent[nidx] = static_cast<std::int32_t>(idx);
        const std::int64_t hn = heuristic(n, goal);
        open.emplace(cand + hn, hn, nidx);
      }
    }
  }
  if (!closed[goal_idx]) {
    throw NoPathError("no path to goal through non-lethal cells");
  }

  std::vector<Vec2> points;
  for (std::int64_t k = static_cast<std::int64_t>(goal_idx); k >= 0;
       k = parent[static_cast<std::size_t>(k)]) {
    points.push_back(grid.center(grid.cell_of(static_cast<std::size_t>(k))));
  }
  std::reverse(points.begin(), points.end());
  result.cost_units = g[goal_idx];
  result.path.points = std::move(points);
  result.path.cost = cost_units_to_meters(result.cost_units, grid.resolution);
  return result;
}

std::optional<Cell> nearest_free_cell(const Costmap& costmap, Cell from) {
  const GridSpec& grid = costmap.grid;
  if (!grid.contains(from)) return std::nullopt;
  std::vector<std::uint8_t> seen(grid.size(), 0);
  std::deque<Cell> queue{from};
  seen[grid.index(from)] = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (!costmap.lethal(c)) return c;
    for (const Step& s : kSteps) {
      const Cell n{c.i + s.di, c.j + s.dj};
      if (grid.contains(n) && !seen[grid.index(n)]) {
        seen[grid.index(n)] = 1;
        queue.push_back(n);
      }
    }
  }
  return std::nullopt;
}

}  // namespace sharenav
