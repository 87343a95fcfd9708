#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sharenav/errors.hpp"
#include "sharenav/session.hpp"
#include "sharenav/simulation.hpp"

namespace fs = std::filesystem;
using namespace sharenav;
using nlohmann::json;

namespace {

constexpr int kExitGoal = 0;
constexpr int kExitError = 1;
constexpr int kExitTimeout = 2;
constexpr int kExitUsage = 64;
constexpr int kExitNoInput = 66;

struct FileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

WorldModel read_world(const fs::path& path) {
  if (!fs::exists(path)) throw FileError("world file not found: " + path.string());
  try {
    return load_world_file(path);
  } catch (const std::ios_base::failure&) {
    throw FileError("cannot read world file: " + path.string());
  }
}

SimConfig read_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("SHARENAV_CONFIG")) path = env;
  }
  if (path.empty()) return {};
  if (!fs::exists(path)) throw FileError("config file not found: " + path);
  try {
    return load_config_file(path);
  } catch (const std::ios_base::failure&) {
    throw FileError("cannot read config file: " + path);
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  return out;
}

CostFilterParams parse_filter(const std::string& text, CostFilterParams p) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--filter", "expected key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--filter", "bad number in '" + item + "'");
    }
    if (key == "d") p.d = value;
    else if (key == "w") p.w = value;
    else if (key == "l") p.l = value;
    else if (key == "s") p.s = value;
    else if (key == "p") p.p = value;
    else throw CLI::ValidationError("--filter", "unknown key '" + key + "'");
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("--filter", e.what());
  }
  return p;
}

json path_json(const PlanResult& r, double resolution) {
  json pts = json::array();
  for (const auto& p : r.path.points) pts.push_back({p.x, p.y});
  return {{"points", pts},
          {"length", r.path.length()},
          {"cost", r.path.cost},
          {"cost_units", r.cost_units},
          {"cost_meters", cost_units_to_meters(r.cost_units, resolution)},
          {"expanded", r.expanded}};
}

struct RunArgs {
  std::string world, mode = "sc", trace, out, config;
};

int do_run(const RunArgs& a) {
  const auto world = read_world(a.world);
  const auto config = read_config(a.config);
  InputTrace trace;
  if (!a.trace.empty()) {
    if (!fs::exists(a.trace)) throw FileError("trace file not found: " + a.trace);
    trace = load_trace_file(a.trace);
  }
  const auto mode = parse_control_mode(a.mode);
  std::optional<std::ofstream> out;
  if (!a.out.empty()) out = open_out(a.out);
  const auto record = run(world, mode, trace, config);
  if (out) {
    write_record(record, *out);
    if (!*out) throw FileError("write failed: " + a.out);
  }
  std::cout << summary_to_json(record.summary).dump() << "\n";
  return record.summary.reached_goal ? kExitGoal : kExitTimeout;
}

struct PlanArgs {
  std::string world, filter, dump, path, config;
  bool all_known = false;
};

int do_plan(const PlanArgs& a) {
  const auto world = read_world(a.world);
  const auto config = read_config(a.config);
  validate(world);
  auto sensed = SensedObstacles::initial(world, config.sensor_range);
  if (a.all_known) sensed = SensedObstacles::all(world, config.sensor_range);
  sensed = sense(world, world.start, sensed);

  const auto obstacles = obstacle_costmap(world, sensed, config);
  const auto endpoint = [&](Vec2 p) {
    const auto c = nearest_free_cell(obstacles, obstacles.grid.cell_at(p).value());
    if (!c) throw NoPathError("no free cell near (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ")");
    return obstacles.grid.center(*c);
  };
  const Vec2 start = endpoint(world.start.position());
  const Vec2 goal = endpoint(world.goal);
  auto result = plan({start, goal, &obstacles}, config.planner);

  std::optional<UserCostFilter> filter;
  if (!a.filter.empty()) {
    const auto params = parse_filter(a.filter, config.filter);
    const Vec2 dir = fit_direction(result.path, world.start, config.fit_length);
    filter = UserCostFilter{build_cost_frame(world.start, params.d, dir), params};
  }
  const auto composed = compose(obstacles, filter);
  if (filter) result = plan({start, goal, &composed}, config.planner);

  if (!a.dump.empty()) {
    auto csv = open_out(a.dump);
    write_costmap_csv(composed, csv);
    auto header = open_out(a.dump + ".json");
    header << costmap_header(composed).dump(2) << "\n";
  }
  if (!a.path.empty()) {
    auto out = open_out(a.path);
    out << path_json(result, config.resolution).dump() << "\n";
  }
  json summary = {{"vertices", result.path.points.size()},
                  {"length", result.path.length()},
                  {"cost_units", result.cost_units},
                  {"expanded", result.expanded}};
  std::cout << summary.dump() << "\n";
  return kExitGoal;
}

struct ServeArgs {
  std::string world, mode = "sc", config, record, address = "127.0.0.1";
  unsigned short port = 8765;
  double rate = 20.0, speed = 1.0;
  std::optional<double> latency, state_delay;
  bool autostart = false, exit_on_done = false;
};

int do_serve(const ServeArgs& a) {
  SessionConfig sc;
  sc.world = read_world(a.world);
  sc.sim = read_config(a.config);
  if (a.latency) sc.sim.latency = *a.latency;
  if (a.state_delay) sc.sim.state_delay = *a.state_delay;
  sc.mode = parse_control_mode(a.mode);
  sc.address = a.address;
  sc.port = a.port;
  sc.broadcast_rate = a.rate;
  sc.speed = a.speed;
  sc.autostart = a.autostart;
  sc.exit_on_done = a.exit_on_done;
  if (!a.record.empty()) sc.record_path = a.record;
  SessionServer server(std::move(sc));
  const auto port = server.start();
  std::cerr << "listening on ws://" << a.address << ":" << port << "\n";
  server.wait();
  if (const auto s = server.last_summary()) {
    std::cout << summary_to_json(*s).dump() << "\n";
    if (a.exit_on_done) return s->reached_goal ? kExitGoal : kExitTimeout;
  }
  return kExitGoal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared-control navigation simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run a scripted trace headlessly");
  run_cmd->add_option("--world", run_args.world, "World file")->required();
  run_cmd->add_option("--mode", run_args.mode, "sc or cs")
      ->check(CLI::IsMember({"sc", "cs", "shared", "switching"}));
  run_cmd->add_option("--trace", run_args.trace, "Input trace (JSON lines)");
  run_cmd->add_option("--out", run_args.out, "Run record output");
  run_cmd->add_option("--config", run_args.config, "Config file");

  PlanArgs plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "Plan once from the start pose");
  plan_cmd->add_option("--world", plan_args.world, "World file")->required();
  plan_cmd->add_option("--filter", plan_args.filter, "d=..,w=..,l=..,s=..,p=..");
  plan_cmd->add_option("--dump", plan_args.dump, "Costmap CSV output");
  plan_cmd->add_option("--path", plan_args.path, "Path JSON output");
  plan_cmd->add_option("--config", plan_args.config, "Config file");
  plan_cmd->add_flag("--all-known", plan_args.all_known,
                     "Treat every obstacle as already sensed");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a live session over WebSocket");
  serve_cmd->add_option("--world", serve_args.world, "World file")->required();
  serve_cmd->add_option("--mode", serve_args.mode, "sc or cs")
      ->check(CLI::IsMember({"sc", "cs", "shared", "switching"}));
  serve_cmd->add_option("--address", serve_args.address, "Bind address");
  serve_cmd->add_option("--port", serve_args.port, "Port, 0 for any");
  serve_cmd->add_option("--rate", serve_args.rate, "State broadcast rate, Hz")
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--latency", serve_args.latency, "Input latency, s")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--state-delay", serve_args.state_delay,
                        "Delay on broadcast state, s")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--speed", serve_args.speed,
                        "Sim seconds per wall second, 0 = flat out")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--record", serve_args.record, "Write the run record here");
  serve_cmd->add_flag("--autostart", serve_args.autostart);
  serve_cmd->add_flag("--exit-on-done", serve_args.exit_on_done);
  serve_cmd->add_option("--config", serve_args.config, "Config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run_cmd) return do_run(run_args);
    if (*plan_cmd) return do_plan(plan_args);
    if (*serve_cmd) return do_serve(serve_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
