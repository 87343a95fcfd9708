#include "sharenav/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "sharenav/errors.hpp"

namespace sharenav {

using nlohmann::json;

std::string_view to_string(RadiationMetric metric) {
  return metric == RadiationMetric::Intensity ? "intensity" : "distance";
}

RadiationMetric parse_radiation_metric(std::string_view text) {
  if (text == "intensity") return RadiationMetric::Intensity;
  if (text == "distance") return RadiationMetric::Distance;
  throw std::invalid_argument("unknown radiation metric '" + std::string(text) +
                              "'");
}

// ---------------------------------------------------------------- config

void SimConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(name) + " must be > 0");
    }
  };
  positive(dt, "dt");
  if (!(latency >= 0.0)) throw std::invalid_argument("latency must be >= 0");
  if (!(state_delay >= 0.0)) {
    throw std::invalid_argument("state_delay must be >= 0");
  }
  positive(replan_period, "replan_period");
  positive(sensor_range, "sensor_range");
  positive(robot_radius, "robot_radius");
  positive(body_radius, "body_radius");
  positive(resolution, "resolution");
  positive(decay_gamma, "decay_gamma");
  positive(fit_length, "fit_length");
  positive(timeout, "timeout");
  positive(tracker.lookahead, "tracker.lookahead");
  positive(tracker.cruise_speed, "tracker.cruise_speed");
  positive(tracker.goal_tolerance, "tracker.goal_tolerance");
  positive(tracker.slowdown_radius, "tracker.slowdown_radius");
  positive(limits.v_max, "limits.v_max");
  positive(limits.omega_max, "limits.omega_max");
  if (planner.cost_weight < 0) {
    throw std::invalid_argument("cost_weight must be >= 0");
  }
  filter.validate();
}

std::int64_t SimConfig::replan_period_ticks() const {
  return std::max<std::int64_t>(1, std::llround(replan_period / dt));
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& out, std::vector<std::string>& seen) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  seen.emplace_back(key);
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: bad \"") + key + "\": " + e.what());
  }
}

void reject_unknown(const json& obj, const std::vector<std::string>& seen,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
      throw ParseError(where + ": unknown key \"" + key + "\"");
    }
  }
}

const json& section(const json& doc, const char* key) {
  const auto& s = doc.at(key);
  if (!s.is_object()) {
    throw ParseError(std::string("config: \"") + key + "\" must be an object");
  }
  return s;
}

}  // namespace

SimConfig config_from_json(const json& doc, SimConfig c) {
  if (!doc.is_object()) throw ParseError("config: expected a JSON object");
  std::vector<std::string> seen;
  take(doc, "dt", c.dt, seen);
  take(doc, "latency", c.latency, seen);
  take(doc, "state_delay", c.state_delay, seen);
  take(doc, "replan_period", c.replan_period, seen);
  take(doc, "sensor_range", c.sensor_range, seen);
  take(doc, "robot_radius", c.robot_radius, seen);
  take(doc, "body_radius", c.body_radius, seen);
  take(doc, "resolution", c.resolution, seen);
  take(doc, "decay_gamma", c.decay_gamma, seen);
  take(doc, "fit_length", c.fit_length, seen);
  take(doc, "timeout", c.timeout, seen);
  take(doc, "cost_weight", c.planner.cost_weight, seen);
  if (doc.contains("filter")) {
    seen.emplace_back("filter");
    const auto& f = section(doc, "filter");
    std::vector<std::string> fs;
    take(f, "w", c.filter.w, fs);
    take(f, "l", c.filter.l, fs);
    take(f, "s", c.filter.s, fs);
    take(f, "p", c.filter.p, fs);
    reject_unknown(f, fs, "config.filter");
  }
  if (doc.contains("tracker")) {
    seen.emplace_back("tracker");
    const auto& t = section(doc, "tracker");
    std::vector<std::string> ts;
    take(t, "lookahead", c.tracker.lookahead, ts);
    take(t, "cruise_speed", c.tracker.cruise_speed, ts);
    take(t, "goal_tolerance", c.tracker.goal_tolerance, ts);
    take(t, "slowdown_radius", c.tracker.slowdown_radius, ts);
    reject_unknown(t, ts, "config.tracker");
  }
  if (doc.contains("limits")) {
    seen.emplace_back("limits");
    const auto& l = section(doc, "limits");
    std::vector<std::string> ls;
    take(l, "v_max", c.limits.v_max, ls);
    take(l, "omega_max", c.limits.omega_max, ls);
    reject_unknown(l, ls, "config.limits");
  }
  try {
    std::string text;
    take(doc, "omega_mapping", text, seen);
    if (!text.empty()) c.omega_mapping = parse_omega_mapping(text);
    text.clear();
    take(doc, "radiation_metric", text, seen);
    if (!text.empty()) c.radiation_metric = parse_radiation_metric(text);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  reject_unknown(doc, seen, "config");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

json config_to_json(const SimConfig& c) {
  return {{"dt", c.dt},
          {"latency", c.latency},
          {"state_delay", c.state_delay},
          {"replan_period", c.replan_period},
          {"sensor_range", c.sensor_range},
          {"robot_radius", c.robot_radius},
          {"body_radius", c.body_radius},
          {"resolution", c.resolution},
          {"decay_gamma", c.decay_gamma},
          {"fit_length", c.fit_length},
          {"timeout", c.timeout},
          {"cost_weight", c.planner.cost_weight},
          {"filter", {{"w", c.filter.w}, {"l", c.filter.l}, {"s", c.filter.s},
                      {"p", c.filter.p}}},
          {"tracker", {{"lookahead", c.tracker.lookahead},
                       {"cruise_speed", c.tracker.cruise_speed},
                       {"goal_tolerance", c.tracker.goal_tolerance},
                       {"slowdown_radius", c.tracker.slowdown_radius}}},
          {"limits", {{"v_max", c.limits.v_max},
                      {"omega_max", c.limits.omega_max}}},
          {"omega_mapping", to_string(c.omega_mapping)},
          {"radiation_metric", to_string(c.radiation_metric)}};
}

SimConfig load_config_file(const std::filesystem::path& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config_from_json(doc, base);
}

// ---------------------------------------------------------------- traces

void validate_trace(const InputTrace& trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (!std::isfinite(trace[i].t) || trace[i].t < 0.0) {
      throw ValidationError("trace[" + std::to_string(i) + "]",
                            "time must be finite and >= 0");
    }
    if (i > 0 && !(trace[i].t > trace[i - 1].t)) {
      throw ValidationError("trace[" + std::to_string(i) + "]",
                            "timestamps must be strictly increasing");
    }
  }
}

InputTrace read_trace(std::istream& in) {
  InputTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      trace.push_back({j.at("t").get<double>(),
                       JoystickState::make(j.value("jx", 0.0), j.value("jy", 0.0),
                                           j.value("trigger", false))});
    } catch (const json::exception& e) {
      throw ParseError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_trace(trace);
  return trace;
}

InputTrace load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return read_trace(in);
}

void write_trace(const InputTrace& trace, std::ostream& out) {
  for (const auto& e : trace) {
    out << json{{"t", e.t},
                {"jx", e.joystick.jx},
                {"jy", e.joystick.jy},
                {"trigger", e.joystick.trigger}}
               .dump()
        << '\n';
  }
}

// ---------------------------------------------------------------- records

double cumulative_radiation(const RunRecord& record) {
  const double dt = record.summary.dt;
  double total = 0.0;
  for (const auto& row : record.rows) total += row.radiation * dt;
  return total;
}

std::optional<double> min_clearance(const WorldModel& world,
                                    const RunRecord& record,
                                    double body_radius) {
  std::optional<double> best;
  for (const auto& row : record.rows) {
    const auto c = obstacle_clearance(world, row.pose.position());
    if (!c) return std::nullopt;
    const double clearance = *c - body_radius;
    if (!best || clearance < *best) best = clearance;
  }
  return best;
}

json row_to_json(const RunRow& row, ControlMode mode) {
  json filter = nullptr;
  if (row.filter) {
    const auto& f = *row.filter;
    filter = {{"d", f.params.d},
              {"w", f.params.w},
              {"l", f.params.l},
              {"s", f.params.s},
              {"p", f.params.p},
              {"origin", {f.frame.origin.x, f.frame.origin.y}},
              {"x_axis", {f.frame.x_axis.x, f.frame.x_axis.y}},
              {"y_axis", {f.frame.y_axis.x, f.frame.y_axis.y}}};
  }
  return {{"type", "row"},
          {"tick", row.tick},
          {"t", row.t},
          {"x", row.pose.x},
          {"y", row.pose.y},
          {"theta", row.pose.theta},
          {"v", row.u.v()},
          {"omega", row.u.omega()},
          {"mode", to_string(mode)},
          {"jx", row.joystick.jx},
          {"jy", row.joystick.jy},
          {"trigger", row.joystick.trigger},
          {"filter", filter},
          {"radiation", row.radiation}};
}

json summary_to_json(const RunSummary& s) {
  json clearance = nullptr;
  if (s.min_clearance) clearance = *s.min_clearance;
  return {{"type", "summary"},
          {"reached_goal", s.reached_goal},
          {"timed_out", s.timed_out},
          {"completion_time", s.completion_time},
          {"cumulative_radiation", s.cumulative_radiation},
          {"min_clearance", clearance},
          {"ticks", s.ticks},
          {"replans", s.replans},
          {"failed_plans", s.failed_plans},
          {"mode", to_string(s.mode)},
          {"dt", s.dt},
          {"radiation_metric", to_string(s.radiation_metric)}};
}

void write_record(const RunRecord& record, std::ostream& out) {
  for (const auto& row : record.rows) {
    out << row_to_json(row, record.summary.mode).dump() << '\n';
  }
  out << summary_to_json(record.summary).dump() << '\n';
}

namespace {

Vec2 vec_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

RunRecord read_record(std::istream& in) {
  RunRecord record;
  std::string line;
  std::size_t lineno = 0;
  bool have_summary = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "row") {
        RunRow row;
        row.tick = j.at("tick").get<std::int64_t>();
        row.t = j.at("t").get<double>();
        row.pose.x = j.at("x").get<double>();
        row.pose.y = j.at("y").get<double>();
        row.pose.theta = j.at("theta").get<double>();
        row.u = ControlInput::admissible(j.at("v").get<double>(),
                                         j.at("omega").get<double>(),
                                         {1e300, 1e300});
        row.joystick.jx = j.at("jx").get<double>();
        row.joystick.jy = j.at("jy").get<double>();
        row.joystick.trigger = j.at("trigger").get<bool>();
        if (!j.at("filter").is_null()) {
          const auto& f = j["filter"];
          UserCostFilter filter;
          filter.params = {f.at("d").get<double>(), f.at("w").get<double>(),
                           f.at("l").get<double>(), f.at("s").get<double>(),
                           f.at("p").get<double>()};
          filter.frame = {vec_of(f.at("origin")), vec_of(f.at("x_axis")),
                          vec_of(f.at("y_axis"))};
          row.filter = filter;
        }
        row.radiation = j.at("radiation").get<double>();
        record.rows.push_back(row);
      } else if (type == "summary") {
        RunSummary& s = record.summary;
        s.reached_goal = j.at("reached_goal").get<bool>();
        s.timed_out = j.at("timed_out").get<bool>();
        s.completion_time = j.at("completion_time").get<double>();
        s.cumulative_radiation = j.at("cumulative_radiation").get<double>();
        if (!j.at("min_clearance").is_null()) {
          s.min_clearance = j["min_clearance"].get<double>();
        }
        s.ticks = j.at("ticks").get<std::int64_t>();
        s.replans = j.at("replans").get<std::int64_t>();
        s.failed_plans = j.at("failed_plans").get<std::int64_t>();
        s.mode = parse_control_mode(j.at("mode").get<std::string>());
        s.dt = j.at("dt").get<double>();
        s.radiation_metric =
            parse_radiation_metric(j.at("radiation_metric").get<std::string>());
        have_summary = true;
      } else {
        throw ParseError("unknown record line type \"" + type + "\"");
      }
    } catch (const json::exception& e) {
      throw ParseError("record line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError("record line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_summary) throw ParseError("record: missing summary line");
  return record;
}

// ---------------------------------------------------------------- simulation

Costmap obstacle_costmap(const WorldModel& world, const SensedObstacles& sensed,
                         const SimConfig& config) {
  const auto grid = GridSpec::covering(world.bounds, config.resolution);
  auto mask = inflate_obstacles(world, sensed, config.robot_radius, grid);
  inflate_bounds(mask, world.bounds, config.robot_radius);
  return compute_obstacle_cost(mask, config.decay_gamma);
}

namespace {

SimConfig checked(SimConfig c) {
  c.validate();
  return c;
}

WorldModel checked(WorldModel w) {
  validate(w);
  return w;
}

}  // namespace

Simulation::Simulation(WorldModel world, ControlMode mode, SimConfig config,
                       SimHooks hooks)
    : world_(checked(std::move(world))),
      mode_(mode),
      config_(checked(config)),
      hooks_(std::move(hooks)),
      clock_(config_.dt),
      delay_(config_.latency),
      grid_(GridSpec::covering(world_.bounds, config_.resolution)) {
  state_ = world_.start;
  state_.v_actual = 0.0;
  state_.omega_actual = 0.0;
  sensed_ = SensedObstacles::initial(world_, config_.sensor_range);
  record_.summary.mode = mode_;
  record_.summary.dt = config_.dt;
  record_.summary.radiation_metric = config_.radiation_metric;
}

void Simulation::enqueue_input(const JoystickState& j, std::optional<double> t) {
  double stamp = t.value_or(time());
  stamp = std::max(stamp, last_push_time_);
  last_push_time_ = stamp;
  pending_.push_back({stamp, JoystickState::make(j.jx, j.jy, j.trigger,
                                                 j.mode_button)});
}

void Simulation::inject_neutral() {
  pending_.clear();
  delay_.reset(JoystickState::neutral());
  applied_ = JoystickState::neutral();
}

double Simulation::metric_at(Vec2 p) const {
  if (config_.radiation_metric == RadiationMetric::Intensity) {
    return radiation_at(world_, p);
  }
  return closest_pool_distance(world_, p).value_or(0.0);
}

double Simulation::radiation() const { return metric_at(state_.position()); }

void Simulation::apply_inputs() {
  const double now = time();
  while (!pending_.empty() && pending_.front().t <= now + kTimeEpsilon) {
    delay_.push(pending_.front().t, pending_.front().joystick);
    pending_.pop_front();
  }
  for (const auto& j : delay_.drain(now)) {
    if (const auto d = filter_event(mode_, applied_, j)) {
      CostFilterParams params = config_.filter;
      params.d = *d;
      const Vec2 dir = path_.empty()
                           ? state_.heading()
                           : fit_direction(path_, state_, config_.fit_length);
      filter_ = UserCostFilter{build_cost_frame(state_, *d, dir), params};
      replan_requested_ = true;
    }
    applied_ = j;
  }
}

void Simulation::update_filter_expiry() {
  if (!filter_ || path_.empty()) return;
  const auto cp = closest_point(path_, state_.position());
  if (filter_->frame.to_frame(cp.point).y > filter_->params.l) {
    filter_.reset();
    replan_requested_ = true;
  }
}

void Simulation::replan() {
  if (obstacle_cost_dirty_) {
    obstacle_cost_ = obstacle_costmap(world_, sensed_, config_);
    obstacle_cost_dirty_ = false;
  }
  composed_ = compose(obstacle_cost_, filter_);
  ++record_.summary.replans;

  auto free_cell_near = [&](Vec2 p) -> std::optional<Cell> {
    const Cell raw{
        std::clamp(static_cast<int>(std::lround((p.x - grid_.origin.x) /
                                                grid_.resolution)),
                   0, grid_.width - 1),
        std::clamp(static_cast<int>(std::lround((p.y - grid_.origin.y) /
                                                grid_.resolution)),
                   0, grid_.height - 1)};
    return nearest_free_cell(composed_, raw);
  };
  const auto start = free_cell_near(state_.position());
  const auto goal = free_cell_near(world_.goal);
  if (!start || !goal) {
    ++record_.summary.failed_plans;
    path_ = {};
    return;
  }
  try {
    auto result = plan({grid_.center(*start), grid_.center(*goal), &composed_},
                       config_.planner);
    if (hooks_.on_plan) hooks_.on_plan(composed_, result);
    path_ = std::move(result.path);
  } catch (const NoPathError&) {
    ++record_.summary.failed_plans;
    path_ = {};
  }
}

void Simulation::finish(bool reached) {
  RunSummary& s = record_.summary;
  s.reached_goal = reached;
  s.timed_out = !reached;
  s.completion_time = time();
  s.ticks = tick();
  finished_ = true;
}

void Simulation::step() {
  if (finished_) return;
  if (distance(state_.position(), world_.goal) <= config_.tracker.goal_tolerance) {
    finish(true);
    return;
  }
  if (time() >= config_.timeout - kTimeEpsilon) {
    finish(false);
    return;
  }

  auto now_sensed = sense(world_, state_, sensed_);
  if (now_sensed.known_obstacles() != sensed_.known_obstacles()) {
    obstacle_cost_dirty_ = true;
  }
  sensed_ = std::move(now_sensed);

  apply_inputs();
  update_filter_expiry();
  if (replan_requested_ || tick() % config_.replan_period_ticks() == 0) {
    replan();
    replan_requested_ = false;
  }

  const ControlInput u_a =
      path_.empty() ? ControlInput{}
                    : track_path(state_, path_, config_.tracker, config_.limits);
  const ControlInput u =
      arbitrate(mode_, applied_, u_a, config_.omega_mapping, config_.limits);

  RunRow row;
  row.tick = tick();
  row.t = time();
  row.pose = {state_.x, state_.y, state_.theta, 0.0, 0.0};
  row.u = u;
  row.joystick = applied_;
  row.filter = filter_;
  row.radiation = metric_at(state_.position());
  record_.summary.cumulative_radiation += row.radiation * config_.dt;
  if (const auto c = obstacle_clearance(world_, state_.position())) {
    const double clearance = *c - config_.body_radius;
    auto& best = record_.summary.min_clearance;
    if (!best || clearance < *best) best = clearance;
  }
  record_.rows.push_back(std::move(row));

  state_ = step_kinematics(state_, u, config_.dt);
  last_u_ = u;
  clock_.advance();
}

void Simulation::run_to_completion() {
  while (!finished_) step();
}

RunRecord run(const WorldModel& world, ControlMode mode,
              const InputTrace& trace, const SimConfig& config,
              SimHooks hooks) {
  validate_trace(trace);
  Simulation sim(world, mode, config, std::move(hooks));
  for (const auto& e : trace) sim.enqueue_input(e.joystick, e.t);
  sim.run_to_completion();
  return sim.record();
}

}  // namespace sharenav
