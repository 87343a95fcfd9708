#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sharenav/errors.hpp"
#include "sharenav/simulation.hpp"

namespace py = pybind11;
using namespace sharenav;

namespace {

using XY = std::tuple<double, double>;
using Pose = std::tuple<double, double, double>;

RobotState to_state(const Pose& p) {
  RobotState q;
  std::tie(q.x, q.y, q.theta) = p;
  return q;
}

Vec2 to_vec(const XY& p) { return {std::get<0>(p), std::get<1>(p)}; }
XY from_vec(Vec2 v) { return {v.x, v.y}; }

SimConfig config_from_text(const std::string& text) {
  return config_from_json(nlohmann::json::parse(text.empty() ? "{}" : text));
}

py::array_t<std::uint8_t> cells_array(const Costmap& c) {
  py::array_t<std::uint8_t> out({c.grid.height, c.grid.width});
  std::copy(c.cells.begin(), c.cells.end(), out.mutable_data());
  return out;
}

std::string record_text(const RunRecord& r) {
  std::ostringstream out;
  write_record(r, out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_sharenav, m) {
  m.doc() = "Shared-control navigation core";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NoPathError>(m, "NoPathError", PyExc_RuntimeError);

  py::class_<WorldModel>(m, "World")
      .def_static("from_file", [](const std::string& p) { return load_world_file(p); })
      .def_static("from_json", [](const std::string& t) { return load_world(t); })
      .def_readonly("name", &WorldModel::name)
      .def_property_readonly("start", [](const WorldModel& w) {
        return Pose{w.start.x, w.start.y, w.start.theta};
      })
      .def_property_readonly("goal", [](const WorldModel& w) { return from_vec(w.goal); })
      .def("to_json", [](const WorldModel& w) { return world_to_json(w).dump(); })
      .def("radiation_at", [](const WorldModel& w, double x, double y) {
        return radiation_at(w, {x, y});
      })
      .def("obstacle_clearance", [](const WorldModel& w, double x, double y) {
        return obstacle_clearance(w, {x, y});
      });

  py::class_<SimConfig>(m, "Config")
      .def(py::init(&config_from_text), py::arg("json") = "{}")
      .def("to_json", [](const SimConfig& c) { return config_to_json(c).dump(); });

  py::class_<Costmap>(m, "Costmap")
      .def_property_readonly("width", [](const Costmap& c) { return c.grid.width; })
      .def_property_readonly("height", [](const Costmap& c) { return c.grid.height; })
      .def_property_readonly("resolution", [](const Costmap& c) { return c.grid.resolution; })
      .def_property_readonly("origin", [](const Costmap& c) { return from_vec(c.grid.origin); })
      .def_property_readonly("cells", &cells_array, "Copy as a (height, width) uint8 array")
      .def("at", [](const Costmap& c, int i, int j) {
        if (!c.grid.contains({i, j})) throw py::index_error("cell off grid");
        return c.at({i, j});
      })
      .def("center", [](const Costmap& c, int i, int j) { return from_vec(c.grid.center({i, j})); })
      .def("cell_at", [](const Costmap& c, double x, double y) -> std::optional<std::tuple<int, int>> {
        const auto cell = c.grid.cell_at({x, y});
        if (!cell) return std::nullopt;
        return std::tuple{cell->i, cell->j};
      })
      .def("header", [](const Costmap& c) { return costmap_header(c).dump(); })
      .def("to_csv", [](const Costmap& c) {
        std::ostringstream out;
        write_costmap_csv(c, out);
        return out.str();
      })
      .def(py::self == py::self);

  m.def("step_kinematics",
        [](const Pose& q, double v, double omega, double dt, double v_max, double omega_max) {
          const auto n = step_kinematics(to_state(q), ControlInput::admissible(v, omega, {v_max, omega_max}), dt);
          return Pose{n.x, n.y, n.theta};
        },
        py::arg("pose"), py::arg("v"), py::arg("omega"), py::arg("dt") = 0.05,
        py::arg("v_max") = ControlLimits{}.v_max, py::arg("omega_max") = ControlLimits{}.omega_max);

  m.def("map_user_velocity",
        [](double jx, double jy, const std::string& mapping) {
          const auto u = map_user_velocity(JoystickState::make(jx, jy, false), parse_omega_mapping(mapping));
          return XY{u.v_h, u.omega};
        },
        py::arg("jx"), py::arg("jy"), py::arg("mapping") = "multiplicative");

  m.def("arbitrate",
        [](const std::string& mode, double jx, double jy, bool trigger, double v_a, double omega_a) {
          const auto u = arbitrate(parse_control_mode(mode), JoystickState::make(jx, jy, trigger),
                                   ControlInput::admissible(v_a, omega_a));
          return XY{u.v(), u.omega()};
        },
        py::arg("mode"), py::arg("jx"), py::arg("jy"), py::arg("trigger"), py::arg("v_a"),
        py::arg("omega_a"));

  m.def("f_lat", &f_lat, py::arg("c_x"), py::arg("w"), py::arg("p"), py::arg("side"));
  m.def("f_lon", &f_lon, py::arg("c_y"), py::arg("l"));
  m.def("g_ui_local",
        [](double c_x, double c_y, double d, double w, double l, double s, double p) {
          CostFilterParams params{d, w, l, s, p};
          params.validate();
          return g_ui_local({c_x, c_y}, params);
        },
        py::arg("c_x"), py::arg("c_y"), py::arg("d") = 0.0, py::arg("w") = 3.0, py::arg("l") = 5.0,
        py::arg("s") = 100.0, py::arg("p") = 1.2);

  m.def("obstacle_costmap",
        [](const WorldModel& w, const SimConfig& c, bool all_known) {
          auto sensed = all_known ? SensedObstacles::all(w, c.sensor_range)
                                  : SensedObstacles::initial(w, c.sensor_range);
          return obstacle_costmap(w, sense(w, w.start, sensed), c);
        },
        "Obstacle costmap as known at the start pose", py::arg("world"),
        py::arg("config") = SimConfig{}, py::arg("all_known") = false);

  m.def("nearest_free",
        [](const Costmap& c, double x, double y) -> std::optional<XY> {
          const auto from = c.grid.cell_at({x, y});
          if (!from) return std::nullopt;
          const auto cell = nearest_free_cell(c, *from);
          if (!cell) return std::nullopt;
          return from_vec(c.grid.center(*cell));
        });

  m.def("plan",
        [](const Costmap& c, const XY& start, const XY& goal, int cost_weight) {
          const auto r = plan({to_vec(start), to_vec(goal), &c}, PlannerConfig{cost_weight});
          std::vector<XY> pts;
          for (const auto& p : r.path.points) pts.push_back(from_vec(p));
          py::dict out;
          out["points"] = pts;
          out["length"] = r.path.length();
          out["cost_units"] = r.cost_units;
          out["cost_meters"] = cost_units_to_meters(r.cost_units, c.grid.resolution);
          out["expanded"] = r.expanded;
          return out;
        },
        py::arg("costmap"), py::arg("start"), py::arg("goal"),
        py::arg("cost_weight") = PlannerConfig{}.cost_weight);

  m.def("fit_direction",
        [](const std::vector<XY>& points, const Pose& q, double arc_len) {
          GlobalPath path;
          for (const auto& p : points) path.points.push_back(to_vec(p));
          return from_vec(fit_direction(path, to_state(q), arc_len));
        },
        py::arg("points"), py::arg("pose"), py::arg("arc_len") = 5.0);

  m.def("compose",
        [](const Costmap& g_obs, const Pose& q, const XY& direction, double d, double w, double l,
           double s, double p) {
          CostFilterParams params{d, w, l, s, p};
          params.validate();
          return compose(g_obs, UserCostFilter{build_cost_frame(to_state(q), d, to_vec(direction)), params});
        },
        py::arg("g_obs"), py::arg("pose"), py::arg("direction"), py::arg("d"), py::arg("w") = 3.0,
        py::arg("l") = 5.0, py::arg("s") = 100.0, py::arg("p") = 1.2);

  m.def("run_jsonl",
        [](const WorldModel& w, const std::string& mode, const std::string& trace_jsonl,
           const SimConfig& c) {
          std::istringstream in(trace_jsonl);
          const auto trace = read_trace(in);
          RunRecord r;
          {
            py::gil_scoped_release release;
            r = run(w, parse_control_mode(mode), trace, c);
          }
          return record_text(r);
        },
        "Headless run; returns the record as JSON lines", py::arg("world"), py::arg("mode") = "sc",
        py::arg("trace") = "", py::arg("config") = SimConfig{});

  py::class_<Simulation>(m, "Simulation")
      .def(py::init([](const WorldModel& w, const std::string& mode, const SimConfig& c) {
             return Simulation(w, parse_control_mode(mode), c);
           }),
           py::arg("world"), py::arg("mode") = "sc", py::arg("config") = SimConfig{})
      .def("enqueue_input",
           [](Simulation& s, double jx, double jy, bool trigger, std::optional<double> t) {
             s.enqueue_input(JoystickState::make(jx, jy, trigger), t);
           },
           py::arg("jx"), py::arg("jy"), py::arg("trigger") = false, py::arg("t") = py::none())
      .def("inject_neutral", &Simulation::inject_neutral)
      .def("step", &Simulation::step)
      .def("run_to_completion", &Simulation::run_to_completion,
           py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("finished", &Simulation::finished)
      .def_property_readonly("tick", &Simulation::tick)
      .def_property_readonly("time", &Simulation::time)
      .def_property_readonly("pose", [](const Simulation& s) {
        return Pose{s.state().x, s.state().y, s.state().theta};
      })
      .def_property_readonly("control", [](const Simulation& s) {
        return XY{s.last_control().v(), s.last_control().omega()};
      })
      .def_property_readonly("path", [](const Simulation& s) {
        std::vector<XY> pts;
        for (const auto& p : s.path().points) pts.push_back(from_vec(p));
        return pts;
      })
      .def_property_readonly("costmap", &Simulation::costmap)
      .def("record_jsonl", [](const Simulation& s) { return record_text(s.record()); });
}
