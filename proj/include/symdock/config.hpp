/*
 * config.hpp
 *
 * Scenario file: one JSON document carrying the arena, vessel parameters,
 * abstraction grid, input grid, selection weights, PID gains, thruster
 * layout and observer tuning. Every section except the arena is optional
 * and falls back to the library defaults.
 */

#ifndef SYMDOCK_CONFIG_HPP_
#define SYMDOCK_CONFIG_HPP_

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "action_select.hpp"
#include "errors.hpp"
#include "low_level.hpp"
#include "scenario.hpp"
#include "synthesis.hpp"

namespace symdock {

using json = nlohmann::json;

struct ScenarioFile {
  Scenario scenario;
  SynthesisConfig synthesis;
  SelectionWeights weights;
  PidGains control;
  ThrusterLayout thrusters;
  ObserverConfig observer;
};

namespace detail {

inline Rect rect_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 4)
    throw ConfigError(std::string(what) + ": expected [x_min, x_max, y_min, y_max]");
  return Rect::from_array(j.get<std::array<double, 4>>());
}

inline Eigen::Vector3d vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(std::string(what) + ": expected 3 numbers");
  const auto a = j.get<std::array<double, 3>>();
  return {a[0], a[1], a[2]};
}

/* 3 numbers (diagonal) or a 3x3 nested array */
inline Eigen::Matrix3d mat3_from(const json& j, const char* what) {
  if (j.is_array() && j.size() == 3 && j[0].is_number())
    return vec3_from(j, what).asDiagonal();
  if (j.is_array() && j.size() == 3) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
      const auto row = vec3_from(j[r], what);
      m.row(r) = row.transpose();
    }
    return m;
  }
  throw ConfigError(std::string(what) + ": expected a diagonal [a,b,c] or a 3x3 matrix");
}

inline json mat3_to(const Eigen::Matrix3d& m) {
  if (m.isDiagonal())
    return json::array({m(0, 0), m(1, 1), m(2, 2)});
  json rows = json::array();
  for (int r = 0; r < 3; ++r)
    rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

inline json vec_to(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v(i));
  return a;
}

} // namespace detail

inline ScenarioFile scenario_from_json(const json& j) {
  using namespace detail;
  if (!j.is_object())
    throw ConfigError("scenario: document must be a JSON object");
  ScenarioFile f;
  Scenario& sc = f.scenario;
  try {
    sc.boundary = rect_from(j.at("boundary"), "boundary");
    sc.target = rect_from(j.at("target"), "target");
    if (j.contains("obstacles"))
      for (const auto& o : j.at("obstacles"))
        sc.obstacles.push_back(rect_from(o, "obstacles"));
    sc.obstacle_margin = j.value("obstacle_margin", sc.obstacle_margin);
    sc.target_margin = j.value("target_margin", sc.target_margin);
    sc.boundary_margin = j.value("boundary_margin", sc.boundary_margin);
    if (j.contains("origin_offset"))
      sc.origin_offset = j.at("origin_offset").get<std::array<double, 2>>();
    if (j.contains("target_heading") && !j.at("target_heading").is_null()) {
      const auto& th = j.at("target_heading");
      sc.target_heading = HeadingWindow{th.at("center").get<double>(), th.at("tolerance").get<double>()};
    }

    if (j.contains("vessel")) {
      const auto& v = j.at("vessel");
      VesselParams& p = sc.vessel;
      if (v.contains("M"))
        p.M = mat3_from(v.at("M"), "vessel.M");
      if (v.contains("D_lin"))
        p.D_lin = mat3_from(v.at("D_lin"), "vessel.D_lin");
      if (v.contains("D_quad"))
        p.D_quad = mat3_from(v.at("D_quad"), "vessel.D_quad");
      if (v.contains("bias"))
        p.bias = Wrench::from(vec3_from(v.at("bias"), "vessel.bias"));
      p.length = v.value("length", p.length);
      p.beam = v.value("beam", p.beam);
    }

    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("resolution")) {
        const auto r = g.at("resolution").get<std::array<double, 2>>();
        f.synthesis.x_res = r[0];
        f.synthesis.y_res = r[1];
      }
      f.synthesis.heading_bins = g.value("heading_bins", f.synthesis.heading_bins);
    }
    f.synthesis.tau_s = j.value("sampling_period", f.synthesis.tau_s);
    if (j.contains("inputs")) {
      const auto& in = j.at("inputs");
      f.synthesis.inputs = InputGrid(in.value("surge", f.synthesis.inputs.surge()),
                                     in.value("sway", f.synthesis.inputs.sway()),
                                     in.value("yaw", f.synthesis.inputs.yaw()));
    }

    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      f.weights.backward = w.value("backward", f.weights.backward);
      f.weights.forward = w.value("forward", f.weights.forward);
    }

    if (j.contains("control")) {
      const auto& c = j.at("control");
      if (c.contains("kp"))
        f.control.kp = vec3_from(c.at("kp"), "control.kp");
      if (c.contains("ki"))
        f.control.ki = vec3_from(c.at("ki"), "control.ki");
      if (c.contains("kd"))
        f.control.kd = vec3_from(c.at("kd"), "control.kd");
      if (c.contains("integral_limit"))
        f.control.integral_limit = vec3_from(c.at("integral_limit"), "control.integral_limit");
    }

    if (j.contains("thrusters")) {
      f.thrusters.thrusters.clear();
      for (const auto& t : j.at("thrusters")) {
        Thruster th;
        th.lx = t.at("x").get<double>();
        th.ly = t.at("y").get<double>();
        const std::string kind = t.at("kind").get<std::string>();
        if (kind == "azimuth")
          th.kind = ThrusterKind::Azimuth;
        else if (kind == "tunnel")
          th.kind = ThrusterKind::Tunnel;
        else
          throw ConfigError("thrusters: unknown kind '" + kind + "'");
        th.max_force = t.at("max_force").get<double>();
        f.thrusters.thrusters.push_back(th);
      }
    }

    if (j.contains("observer")) {
      const auto& o = j.at("observer");
      if (o.contains("meas_sigma"))
        f.observer.meas_sigma = vec3_from(o.at("meas_sigma"), "observer.meas_sigma");
      if (o.contains("process_noise")) {
        const auto q = o.at("process_noise").get<std::array<double, 6>>();
        for (int i = 0; i < 6; ++i)
          f.observer.process_noise(i) = q[i];
      }
      f.observer.rate_hz = o.value("rate_hz", f.observer.rate_hz);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }

  sc.validate();
  f.control.validate();
  ThrustAllocator check(f.thrusters);
  (void)check;
  if (!(f.observer.rate_hz > 0.0) || (f.observer.meas_sigma.array() <= 0).any())
    throw ConfigError("observer: rate and measurement sigmas must be positive");
  // grid geometry is validated by constructing it
  (void)Grid(sc.boundary, f.synthesis.x_res, f.synthesis.y_res, f.synthesis.heading_bins);
  return f;
}

inline json scenario_to_json(const ScenarioFile& f) {
  using namespace detail;
  const Scenario& sc = f.scenario;
  json j;
  j["boundary"] = sc.boundary.as_array();
  j["obstacles"] = json::array();
  for (const auto& o : sc.obstacles)
    j["obstacles"].push_back(o.as_array());
  j["target"] = sc.target.as_array();
  j["obstacle_margin"] = sc.obstacle_margin;
  j["target_margin"] = sc.target_margin;
  j["boundary_margin"] = sc.boundary_margin;
  j["origin_offset"] = sc.origin_offset;
  if (sc.target_heading)
    j["target_heading"] = {{"center", sc.target_heading->center},
                           {"tolerance", sc.target_heading->tolerance}};
  j["vessel"] = {{"M", mat3_to(sc.vessel.M)},
                 {"D_lin", mat3_to(sc.vessel.D_lin)},
                 {"D_quad", mat3_to(sc.vessel.D_quad)},
                 {"bias", {sc.vessel.bias.fx, sc.vessel.bias.fy, sc.vessel.bias.mz}},
                 {"length", sc.vessel.length},
                 {"beam", sc.vessel.beam}};
  j["grid"] = {{"resolution", {f.synthesis.x_res, f.synthesis.y_res}},
               {"heading_bins", f.synthesis.heading_bins}};
  j["sampling_period"] = f.synthesis.tau_s;
  j["inputs"] = {{"surge", f.synthesis.inputs.surge()},
                 {"sway", f.synthesis.inputs.sway()},
                 {"yaw", f.synthesis.inputs.yaw()}};
  j["weights"] = {{"backward", f.weights.backward}, {"forward", f.weights.forward}};
  j["control"] = {{"kp", vec_to(f.control.kp)},
                  {"ki", vec_to(f.control.ki)},
                  {"kd", vec_to(f.control.kd)},
                  {"integral_limit", vec_to(f.control.integral_limit)}};
  j["thrusters"] = json::array();
  for (const auto& t : f.thrusters.thrusters)
    j["thrusters"].push_back({{"x", t.lx},
                              {"y", t.ly},
                              {"kind", t.kind == ThrusterKind::Azimuth ? "azimuth" : "tunnel"},
                              {"max_force", t.max_force}});
  j["observer"] = {{"meas_sigma", vec_to(f.observer.meas_sigma)},
                   {"process_noise", vec_to(f.observer.process_noise)},
                   {"rate_hz", f.observer.rate_hz}};
  return j;
}

inline ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open scenario file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario file '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

} // namespace symdock

#endif /* SYMDOCK_CONFIG_HPP_ */
