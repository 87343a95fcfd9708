// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sharenav/errors.hpp"
#include "sharenav/session.hpp"
#include "sharenav/simulation.hpp"
#include "support/oracles.hpp"
#include "support/ws_client.hpp"

using namespace sharenav;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

WorldModel bundled(const std::string& name) {
  return load_world_file(std::string(SHARENAV_DATA_DIR) + "/worlds/" + name + ".world");
}

InputTrace bundled_trace(const std::string& name) {
  return load_trace_file(std::string(SHARENAV_DATA_DIR) + "/traces/" + name + ".jsonl");
}

const std::vector<std::string> kWorlds{"open", "corridor", "forest", "toxic", "slalom"};

std::string serialized(const RunRecord& r) {
  std::ostringstream out;
  write_record(r, out);
  return out.str();
}

Outcome planner_oracle() {
  Outcome o;
  std::mt19937 rng(20250317);
  std::uniform_int_distribution<int> cost(0, 254), cell(0, 49);
  std::bernoulli_distribution wall(0.25);
  double worst_ms = 0;
  int maps = 0;
  while (maps < 100) {
    GridSpec g{{0, 0}, 0.1, 50, 50};
    Costmap m{g, std::vector<std::uint8_t>(g.size())};
    for (auto& c : m.cells) c = wall(rng) ? 255 : static_cast<std::uint8_t>(cost(rng));
    const Cell s{cell(rng), cell(rng)}, t{cell(rng), cell(rng)};
    m.cells[g.index(s)] = 0;
    m.cells[g.index(t)] = 0;
    const auto want =
        oracle::dijkstra({g.width, g.height, m.cells}, s.i, s.j, t.i, t.j,
                         PlannerConfig{}.cost_weight);
    if (!want) continue;  // only connected instances count
    ++maps;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = plan({g.center(s), g.center(t), &m});
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    worst_ms = std::max(worst_ms, ms);
    if (r.cost_units != *want) o.fail("cost mismatch on map " + std::to_string(maps));
    if (ms >= 50.0) o.fail("plan took " + fmt("%.1f ms", ms));
  }
  if (o.pass) o.detail = "100 maps exact, slowest " + fmt("%.2f ms", worst_ms);
  return o;
}

Outcome valley_steering() {
  Outcome o;
  const auto world = bundled("open");
  const SimConfig config;
  const RobotState q = world.start;
  const auto sensed = sense(world, q, SensedObstacles::initial(world, config.sensor_range));
  const auto obstacles = obstacle_costmap(world, sensed, config);
  const auto base = plan({q.position(), world.goal, &obstacles}, config.planner);
  const Vec2 dir = fit_direction(base.path, q, config.fit_length);

  std::vector<double> offsets;
  for (double d : {0.0, 1.25, 2.5, 3.75}) {
    CostFilterParams params{d, 3.0, 5.0, 100.0, 1.2};
    UserCostFilter filter{build_cost_frame(q, d, dir), params};
    const auto composed = compose(obstacles, filter);
    const auto r = plan({q.position(), world.goal, &composed}, config.planner);
    double sum = 0;
    int n = 0;
    for (const auto& p : r.path.points) {
      const double cy = filter.frame.to_frame(p).y;
      if (cy >= 0.0 && cy <= params.l) {
        sum += (p - q.position()).dot(q.lateral_axis());
        ++n;
      }
    }
    offsets.push_back(n > 0 ? sum / n : NAN);
  }
  if (!(std::abs(offsets[0]) <= 0.1)) o.fail("d=0 offset " + fmt("%.3f", offsets[0]));
  for (std::size_t k = 1; k < offsets.size(); ++k) {
    if (!(offsets[k] > 0)) o.fail("offset not positive at index " + std::to_string(k));
    if (!(offsets[k] >= offsets[k - 1])) o.fail("offset decreased at index " + std::to_string(k));
  }
  std::string list;
  for (double v : offsets) list += (list.empty() ? "" : ", ") + fmt("%.3f", v);
  o.detail = (o.pass ? "" : o.detail + "; ") + "mean offsets [" + list + "] m";
  return o;
}

Outcome costmap_numerics() {
  Outcome o;
  const double lon = f_lon(5.0, 5.0);
  if (!(std::abs(lon - 0.5) <= 1e-9)) o.fail("f_lon(l) = " + fmt("%.12f", lon));
  const double lat = f_lat(0.0, 3.0, 1.0, 1);
  if (!(std::abs(lat - 0.9640) <= 5e-4)) o.fail("f_lat(0) = " + fmt("%.6f", lat));

  const auto world = bundled("forest");
  const SimConfig config;
  const auto obstacles =
      obstacle_costmap(world, SensedObstacles::all(world, config.sensor_range), config);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-5, 5), x(2, 28), y(2, 48), th(-3, 3);
  std::size_t lethal = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const RobotState q{x(rng), y(rng), th(rng)};
    CostFilterParams params{d(rng), 3.0, 5.0, trial % 2 ? 255.0 : 100.0, 1.2};
    UserCostFilter filter{build_cost_frame(q, params.d, q.heading()), params};
    const auto c = compose(obstacles, filter);
    for (std::size_t k = 0; k < c.cells.size(); ++k) {
      const int obs = obstacles.cells[k];
      const int ui = g_ui_at(c.grid.center(c.grid.cell_of(k)), filter.frame, params);
      const int cell = c.cells[k];
      if (ui < 0 || ui > 255 || cell < 0 || cell > 255) {
        o.fail("value out of range");
        break;
      }
      if (cell != std::min(255, obs + ui)) {
        o.fail("compose mismatch");
        break;
      }
      if (obs == 255) {
        ++lethal;
        if (cell != 255) o.fail("lethal cell not saturated");
      }
    }
  }
  if (lethal == 0) o.fail("no lethal cells exercised");
  if (o.pass) {
    o.detail = "f_lon(l)=" + fmt("%.10f", lon) + ", f_lat(0)=" + fmt("%.6f", lat) +
               ", " + std::to_string(lethal) + " lethal cells stay 255";
  }
  return o;
}

Outcome delay_exactness() {
  Outcome o;
  const double dt = 0.05, latency = 1.0;
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> gap(0.07, 0.5), jx(-1, 1), jy(-1.0, -0.6);
  InputTrace trace;
  double t = 0.0;
  while (trace.size() < 100) {
    t += gap(rng);
    // Stay clear of the tick grid so the expected tick is unambiguous.
    const double q = (t + latency) / dt;
    if (std::abs(q - std::round(q)) < 1e-6) continue;
    trace.push_back({t, JoystickState::make(jx(rng), jy(rng), false)});
  }
  const auto r = run(bundled("open"), ControlMode::ControlSwitching, trace);
  std::size_t from = 0;
  int checked = 0;
  for (const auto& e : trace) {
    const auto want = oracle::first_tick_at_or_after(e.t, latency, dt);
    std::int64_t got = -1;
    for (std::size_t k = from; k < r.rows.size(); ++k) {
      if (r.rows[k].joystick == e.joystick) {
        got = r.rows[k].tick;
        from = k + 1;
        break;
      }
    }
    if (got != want) {
      o.fail("event at t=" + fmt("%.6f", e.t) + " took effect at tick " +
             std::to_string(got) + ", expected " + std::to_string(want));
      break;
    }
    ++checked;
  }
  if (o.pass) o.detail = std::to_string(checked) + " events matched ceil((t+1)/dt)";
  return o;
}

Outcome arbitration_contracts() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ax(-1, 1), v(0, 1.5), w(-1, 1);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 10'000 && o.pass; ++k) {
    const auto mode = coin(rng) ? ControlMode::SharedControl : ControlMode::ControlSwitching;
    const auto j = JoystickState::make(ax(rng), ax(rng), coin(rng));
    const auto ua = ControlInput::admissible(v(rng), w(rng));
    const auto u = arbitrate(mode, j, ua);
    if (mode == ControlMode::ControlSwitching && j.trigger) {
      const auto uh = map_user_velocity(j);
      if (u.v() != uh.v_h || u.omega() != uh.omega) o.fail("CS takeover not verbatim");
      continue;
    }
    if (u.v() > lever_speed(j.jy)) o.fail("v above lever cap");
    if (mode == ControlMode::SharedControl && std::abs(u.omega()) > omega_limit(j.jy)) {
      o.fail("SC omega above limit");
    }
  }
  for (const auto& name : kWorlds) {
    const auto sc = run(bundled(name), ControlMode::SharedControl, {});
    const auto cs = run(bundled(name), ControlMode::ControlSwitching, {});
    bool same = sc.rows.size() == cs.rows.size();
    for (std::size_t k = 0; same && k < sc.rows.size(); ++k) {
      same = sc.rows[k].pose == cs.rows[k].pose && sc.rows[k].u == cs.rows[k].u;
    }
    if (!same) o.fail("null trace SC != CS on " + name);
  }
  if (o.pass) o.detail = "10000 triples; null-trace SC == CS on 5 worlds";
  return o;
}

Outcome safety() {
  Outcome o;
  const std::vector<std::string> traces{"null", "sc_right", "sc_left", "takeover", "mixed",
                                        "slow"};
  int runs = 0;
  std::size_t vertices = 0;
  double worst_clearance = INFINITY, slowest = 0;
  for (const auto& name : kWorlds) {
    const auto world = bundled(name);
    for (const auto& t : traces) {
      for (auto mode : {ControlMode::SharedControl, ControlMode::ControlSwitching}) {
        SimHooks hooks;
        hooks.on_plan = [&](const Costmap& cm, const PlanResult& r) {
          for (const auto& p : r.path.points) {
            ++vertices;
            const auto c = cm.grid.cell_at(p);
            if (!c || cm.lethal(*c)) o.fail("lethal path vertex in " + name + "/" + t);
          }
        };
        const auto r = run(world, mode, bundled_trace(t), {}, hooks);
        ++runs;
        const std::string tag = name + "/" + t + "/" + std::string(to_string(mode));
        if (!r.summary.reached_goal) o.fail(tag + " did not reach the goal");
        slowest = std::max(slowest, r.summary.completion_time);
        if (r.summary.min_clearance) {
          worst_clearance = std::min(worst_clearance, *r.summary.min_clearance);
          if (*r.summary.min_clearance < 0) o.fail(tag + " penetrated an obstacle");
        }
      }
    }
  }
  // The stop lever is the one run that must not arrive.
  const auto stop = run(bundled("open"), ControlMode::ControlSwitching,
                        bundled_trace("stop_lever"));
  if (!stop.summary.timed_out || stop.summary.completion_time < 600.0 - 1e-6) {
    o.fail("stop-lever run did not time out at 600 s");
  }
  if (o.pass) {
    o.detail = std::to_string(runs) + " runs reached the goal (slowest " +
               fmt("%.1f s", slowest) + "), min clearance " +
               fmt("%.3f m", worst_clearance) + ", " + std::to_string(vertices) +
               " path vertices non-lethal; stop lever timed out";
  }
  return o;
}

Outcome determinism() {
  Outcome o;
  for (const auto& name : kWorlds) {
    for (auto mode : {ControlMode::SharedControl, ControlMode::ControlSwitching}) {
      const auto a = serialized(run(bundled(name), mode, bundled_trace("mixed")));
      const auto b = serialized(run(bundled(name), mode, bundled_trace("mixed")));
      if (a != b) o.fail("repeat run differs on " + name);
    }
  }

  // Served run with the same timed inputs, sent before the start command.
  const auto trace = bundled_trace("sc_right");
  const auto path = std::filesystem::temp_directory_path() / "sharenav_acceptance_served.jsonl";
  std::filesystem::remove(path);
  SessionConfig cfg;
  cfg.world = bundled("forest");
  cfg.mode = ControlMode::SharedControl;
  cfg.port = 0;
  cfg.speed = 0.0;
  cfg.exit_on_done = true;
  cfg.record_path = path;
  try {
    SessionServer server(cfg);
    test_support::WsClient client(server.start());
    client.read_until("hello");
    for (const auto& e : trace) {
      client.send(test_support::input(e.t, e.joystick.jx, e.joystick.jy, e.joystick.trigger));
    }
    client.send(test_support::command("start"));
    client.read_until("metrics");
    if (!server.wait_for(std::chrono::seconds(30))) o.fail("served run did not finish");
  } catch (const std::exception& e) {
    o.fail(std::string("session error: ") + e.what());
  }
  std::ifstream in(path);
  std::stringstream served;
  served << in.rdbuf();
  const auto headless = serialized(run(cfg.world, cfg.mode, trace));
  if (served.str() != headless) o.fail("served record differs from headless record");
  if (o.pass) o.detail = "10 repeated runs byte-identical; served == headless record";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"planner oracle equivalence", planner_oracle},
      {"valley steering", valley_steering},
      {"costmap numerics", costmap_numerics},
      {"delay exactness", delay_exactness},
      {"arbitration contracts", arbitration_contracts},
      {"safety", safety},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
