// Scenario files: arena dimensions, cube poses, blink-light attachments and
// the robot start pose. JSON with a versioned `schema` field.
#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "beltbot/calibration.hpp"
#include "beltbot/world.hpp"
#include "json.hpp"

namespace beltbot {

struct Scenario {
  Arena arena = Arena{};
  Pose robot_start{0.0, 0.0, 0.0};
  std::vector<Cube> cubes;
  std::vector<BlinkLight> lights;
};

inline WorldState make_world(const Scenario& s) {
  return WorldState{s.arena, s.cubes, s.lights};
}

inline void validate(const Scenario& s) {
  if (s.lights.size() > 3)
    throw ConfigError("scenario: at most 3 blink lights are allowed");
  std::set<int> ids;
  for (const Cube& c : s.cubes) {
    if (!ids.insert(c.id).second)
      throw ConfigError("scenario: duplicate cube id " +
                        std::to_string(c.id));
    if (c.side_cm <= 0.0)
      throw ConfigError("scenario: cube side must be positive");
    if (c.drag_per_s < 0.0)
      throw ConfigError("scenario: cube drag must be non-negative");
  }
  for (const BlinkLight& l : s.lights)
    if (l.cube_id && ids.count(*l.cube_id) == 0)
      throw ConfigError("scenario: blink light references unknown cube id " +
                        std::to_string(*l.cube_id));
}

/// Three cubes spread over the white area, one blink light in each.
/// Cube poses are not printed in the source material; this layout keeps every
/// white-area point within ultrasound reach of at least one cube.
inline Scenario default_scenario() {
  Scenario s;
  s.arena = make_arena(150.0, 120.0, 17.0);
  s.robot_start = {0.0, 0.0, 0.0};
  s.cubes = {
      Cube{0, CubeColor::red, {32.0, 20.0}, 15.0},
      Cube{1, CubeColor::green, {-36.0, 24.0}, 0.0},
      Cube{2, CubeColor::blue, {-5.0, -26.0}, 30.0},
  };
  s.lights = {BlinkLight{0, {}}, BlinkLight{1, {}}, BlinkLight{2, {}}};
  return s;
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["schema"] = "beltbot-scenario/1";
  j["units"] = "cm";
  j["arena"] = {{"cardboard_width", s.arena.cardboard_width},
                {"cardboard_height", s.arena.cardboard_height},
                {"fringe", s.arena.fringe}};
  j["robot"] = {{"x", s.robot_start.x},
                {"y", s.robot_start.y},
                {"heading_deg", s.robot_start.heading_deg}};
  j["cubes"] = nlohmann::ordered_json::array();
  for (const Cube& c : s.cubes) {
    nlohmann::ordered_json cj;
    cj["id"] = c.id;
    cj["color"] = to_string(c.color);
    cj["x"] = c.position.x;
    cj["y"] = c.position.y;
    cj["heading_deg"] = c.heading_deg;
    cj["side_cm"] = c.side_cm;
    cj["drag_per_s"] = c.drag_per_s;
    j["cubes"].push_back(cj);
  }
  j["blink_lights"] = nlohmann::ordered_json::array();
  for (const BlinkLight& l : s.lights) {
    nlohmann::ordered_json lj;
    if (l.cube_id)
      lj["cube"] = *l.cube_id;
    else {
      lj["x"] = l.position.x;
      lj["y"] = l.position.y;
    }
    j["blink_lights"].push_back(lj);
  }
  return j;
}

/// `cm_per_unit` converts coordinates when the file declares
/// `"units": "scene"`.
inline Scenario scenario_from_json(const nlohmann::json& j,
                                   double cm_per_unit = 9.49223) {
  detail::expect_object(j, "scenario");
  detail::check_keys(
      j, {"schema", "units", "arena", "robot", "cubes", "blink_lights"},
      "scenario");
  if (j.contains("schema") &&
      j.at("schema").get<std::string>() != "beltbot-scenario/1")
    throw ConfigError("scenario: unsupported schema '" +
                      j.at("schema").get<std::string>() + "'");
  double scale = 1.0;
  if (j.contains("units")) {
    std::string u = j.at("units").get<std::string>();
    if (u == "scene")
      scale = cm_per_unit;
    else if (u != "cm")
      throw ConfigError("scenario.units: expected \"cm\" or \"scene\"");
  }

  Scenario s;
  if (j.contains("arena")) {
    const auto& a = j.at("arena");
    detail::check_keys(a, {"cardboard_width", "cardboard_height", "fringe"},
                       "scenario.arena");
    double w = a.value("cardboard_width", 150.0 / scale) * scale;
    double h = a.value("cardboard_height", 120.0 / scale) * scale;
    double f = a.value("fringe", 17.0 / scale) * scale;
    try {
      s.arena = make_arena(w, h, f);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("scenario.arena: ") + e.what());
    }
  }
  if (j.contains("robot")) {
    const auto& r = j.at("robot");
    detail::check_keys(r, {"x", "y", "heading_deg"}, "scenario.robot");
    s.robot_start = {r.value("x", 0.0) * scale, r.value("y", 0.0) * scale,
                     r.value("heading_deg", 0.0)};
  }
  if (j.contains("cubes")) {
    for (const auto& cj : j.at("cubes")) {
      detail::check_keys(
          cj, {"id", "color", "x", "y", "heading_deg", "side_cm", "drag_per_s"},
          "scenario.cubes[]");
      Cube c;
      c.id = cj.at("id").get<int>();
      try {
        c.color = cube_color_from_string(cj.at("color").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scenario.cubes[]: ") + e.what());
      }
      c.position = {cj.at("x").get<double>() * scale,
                    cj.at("y").get<double>() * scale};
      c.heading_deg = cj.value("heading_deg", 0.0);
      c.side_cm = cj.value("side_cm", 5.0 / scale) * scale;
      c.drag_per_s = cj.value("drag_per_s", 5.0);
      s.cubes.push_back(c);
    }
    std::sort(s.cubes.begin(), s.cubes.end(),
              [](const Cube& a, const Cube& b) { return a.id < b.id; });
  }
  if (j.contains("blink_lights")) {
    for (const auto& lj : j.at("blink_lights")) {
      detail::check_keys(lj, {"cube", "x", "y"}, "scenario.blink_lights[]");
      BlinkLight l;
      if (lj.contains("cube"))
        l.cube_id = lj.at("cube").get<int>();
      else
        l.position = {lj.at("x").get<double>() * scale,
                      lj.at("y").get<double>() * scale};
      s.lights.push_back(l);
    }
  }
  validate(s);
  return s;
}

inline Scenario load_scenario(const std::string& path,
                              double cm_per_unit = 9.49223) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j, cm_per_unit);
}

}  // namespace beltbot
