// Calibration data: motor-model constants, sensor fit polynomials, sensor rig
// geometry, robot footprint and solution tunables. Defaults are compiled in;
// a calibration file (JSON) may override any field.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "beltbot/geometry.hpp"
#include "json.hpp"

namespace beltbot {

/// Configuration / input-file problem. CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Polynomial with coefficients in ascending order: c0 + c1 x + c2 x^2 + ...
struct Polynomial {
  std::vector<double> coeffs;

  double eval(double x) const {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
  }
};

struct CalibrationConstants {
  double cm_per_unit = 9.49223;       // scene unit -> cm
  double speed_slope_cm_s_per_pct = 0.35;  // calibration placeholder
  double turn_slope_deg_s_per_pct = 2.0;   // calibration placeholder
  double speed_saturation_pct = 75.0;
  double turn_saturation_pct = 60.0;
  double accel_limit_pp_per_tick = 9.0;
  double push_threshold_pct = 20.0;
  double push_slowdown_fraction = 0.05;
  double tick_rate_hz = 50.0;
  double right_motor_gain = 1.0;  // perturbation hook, 1.0 = nominal

  double tick_s() const { return 1.0 / tick_rate_hz; }
  double tick_ms() const { return 1000.0 / tick_rate_hz; }
};

enum class DeltaMode { percent, raw };

/// Sensor emulation constants and fit polynomials. Polynomial defaults carry
/// the printed fit coefficients as decimal literals.
struct SensorFits {
  double reflect_white = 47.0;
  double reflect_cardboard = 36.0;
  double reflect_off = 16.0;

  // Ultrasound: cutoff(g) interpolates the printed endpoints over g in [0,45].
  double cutoff_at_0_deg = 35.0;
  double cutoff_at_45_deg = 22.0;
  double ultrasound_slope_cm_per_cm = 1.0;  // identity conversion

  // Blink light model.
  Polynomial blink_distance{{200.0, -8.55, 0.144, -0.0011, 3e-6}};       // D(d)
  Polynomial blink_view_left{{25.023, -0.1567, -0.0277, 7e-5, 8e-6}};    // 24*b_l
  Polynomial blink_view_right{{26.005, -0.0891, -0.027, 7e-5, 7e-6}};    // 24*b_r
  Polynomial cube_orientation{{87.133, -3.0929, 0.0338}};                // 24*(1-phi)
  Polynomial orientation_distance{{-4.6, -0.482, -0.0144, 0.0002, -1e-6, 3e-9}};
  double blink_norm = 24.0;
  double blink_delay_ms = 500.0;
  double blink_fit_min_cm = 15.0;   // D/delta held constant outside
  double blink_fit_max_cm = 80.0;
  double blink_view_half_angle_deg = 45.0;  // beta support; 0 outside
  double phi_min_deg = 30.0;  // orientation correction window (folded angle)
  double phi_max_deg = 60.0;
  DeltaMode delta_mode = DeltaMode::percent;

  // Red reflection raycast model.
  Polynomial red_left{{158.94, -19.52, 0.8174, -0.0114}};
  Polynomial red_right{{229.03, -28.979, 1.244, -0.0177}};
  double red_bluegreen_slope = -0.1572;  // bluegreen = slope*(d-pivot)+intercept
  double red_bluegreen_pivot = 5.0;
  double red_bluegreen_intercept = 5.5442;
  double red_fit_min_cm = 5.0;
  double red_fit_max_cm = 50.0;
  double red_ambient = 0.0;  // value of a ray that hits nothing
  int red_rays = 21;
  double red_view_angle_deg = 30.0;
  double red_circle_radius_frac = 0.6;  // circle collider, x cube half-side

  double cutoff_deg(double gamma_deg) const {
    return cutoff_at_0_deg +
           (cutoff_at_45_deg - cutoff_at_0_deg) * (gamma_deg / 45.0);
  }
  int blink_delay_ticks(const CalibrationConstants& c) const {
    return static_cast<int>(std::lround(blink_delay_ms / c.tick_ms()));
  }
  double bluegreen(double d) const {
    return red_bluegreen_slope * (d - red_bluegreen_pivot) +
           red_bluegreen_intercept;
  }
};

/// Sensor mount points in the robot frame (x forward, y left), cm.
struct SensorRig {
  Vec2 ultrasound_offset{9.0, 0.0};
  Vec2 light_left_offset{7.0, 5.0};
  Vec2 light_right_offset{7.0, -5.0};
  double light_left_facing_deg = 0.0;
  double light_right_facing_deg = 0.0;
  Vec2 reflect_offset{7.0, 0.0};
};

/// Robot footprint; not printed in the datasheet excerpts, config assumption.
struct RobotShape {
  double length_cm = 18.0;  // along forward axis
  double width_cm = 14.0;

  double half_diagonal() const {
    return std::hypot(length_cm / 2.0, width_cm / 2.0);
  }
};

/// Tunables of the three reference solutions. Printed values keep the
/// paper's numbers; speeds are unprinted and chosen as documented defaults.
struct SolutionParams {
  double search_turn_speed_pct = 40.0;
  double drive_speed_pct = 60.0;
  double ultrasound_detect_cm = 120.0;
  double blink_threshold = 13.0;
  double blink_step_deg = 20.0;
  double blink_pause_ms = 1000.0;
  int blink_abort_steps = 18;
  double blink_reposition_ms = 2000.0;
  double push_past_ms = 500.0;
  double lost_light_grace_ms = 1000.0;
  double edge_reflect_threshold = 41.5;  // between white 47 and cardboard 36
};

struct Calibration {
  CalibrationConstants constants;
  SensorFits fits;
  SensorRig rig;
  RobotShape robot;
  SolutionParams solutions;
};

// --- JSON (partial overrides; unknown keys are errors) ----------------------

namespace detail {

using json = nlohmann::json;

inline void expect_object(const json& j, const std::string& where) {
  if (!j.is_object())
    throw ConfigError(where + ": expected a JSON object");
}

template <typename T>
void assign(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline void assign_poly(const json& j, const char* key, Polynomial& out,
                        const std::string& where) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.empty())
    throw ConfigError(where + "." + key +
                      ": expected a nonempty array of coefficients "
                      "(ascending powers)");
  out.coeffs = a.get<std::vector<double>>();
}

inline void assign_vec2(const json& j, const char* key, Vec2& out,
                        const std::string& where) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 2)
    throw ConfigError(where + "." + key + ": expected [x, y]");
  out = {a.at(0).get<double>(), a.at(1).get<double>()};
}

inline void check_keys(const json& j, std::initializer_list<const char*> known,
                       const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace detail

inline void apply_overrides(CalibrationConstants& c,
                            const nlohmann::json& j) {
  using namespace detail;
  const std::string w = "constants";
  expect_object(j, w);
  check_keys(j,
             {"cm_per_unit", "speed_slope_cm_s_per_pct",
              "turn_slope_deg_s_per_pct", "speed_saturation_pct",
              "turn_saturation_pct", "accel_limit_pp_per_tick",
              "push_threshold_pct", "push_slowdown_fraction", "tick_rate_hz",
              "right_motor_gain"},
             w);
  assign(j, "cm_per_unit", c.cm_per_unit, w);
  assign(j, "speed_slope_cm_s_per_pct", c.speed_slope_cm_s_per_pct, w);
  assign(j, "turn_slope_deg_s_per_pct", c.turn_slope_deg_s_per_pct, w);
  assign(j, "speed_saturation_pct", c.speed_saturation_pct, w);
  assign(j, "turn_saturation_pct", c.turn_saturation_pct, w);
  assign(j, "accel_limit_pp_per_tick", c.accel_limit_pp_per_tick, w);
  assign(j, "push_threshold_pct", c.push_threshold_pct, w);
  assign(j, "push_slowdown_fraction", c.push_slowdown_fraction, w);
  assign(j, "tick_rate_hz", c.tick_rate_hz, w);
  assign(j, "right_motor_gain", c.right_motor_gain, w);
  if (c.tick_rate_hz <= 0) throw ConfigError("constants.tick_rate_hz must be > 0");
}

inline void apply_overrides(SensorFits& f, const nlohmann::json& j) {
  using namespace detail;
  const std::string w = "fits";
  expect_object(j, w);
  check_keys(j,
             {"reflect_white", "reflect_cardboard", "reflect_off",
              "cutoff_at_0_deg", "cutoff_at_45_deg",
              "ultrasound_slope_cm_per_cm", "blink_distance",
              "blink_view_left", "blink_view_right", "cube_orientation",
              "orientation_distance", "blink_norm", "blink_delay_ms",
              "blink_fit_min_cm", "blink_fit_max_cm",
              "blink_view_half_angle_deg", "phi_min_deg", "phi_max_deg",
              "delta_mode", "red_left", "red_right", "red_bluegreen_slope",
              "red_bluegreen_pivot", "red_bluegreen_intercept",
              "red_fit_min_cm", "red_fit_max_cm", "red_ambient", "red_rays",
              "red_view_angle_deg", "red_circle_radius_frac"},
             w);
  assign(j, "reflect_white", f.reflect_white, w);
  assign(j, "reflect_cardboard", f.reflect_cardboard, w);
  assign(j, "reflect_off", f.reflect_off, w);
  assign(j, "cutoff_at_0_deg", f.cutoff_at_0_deg, w);
  assign(j, "cutoff_at_45_deg", f.cutoff_at_45_deg, w);
  assign(j, "ultrasound_slope_cm_per_cm", f.ultrasound_slope_cm_per_cm, w);
  assign_poly(j, "blink_distance", f.blink_distance, w);
  assign_poly(j, "blink_view_left", f.blink_view_left, w);
  assign_poly(j, "blink_view_right", f.blink_view_right, w);
  assign_poly(j, "cube_orientation", f.cube_orientation, w);
  assign_poly(j, "orientation_distance", f.orientation_distance, w);
  assign(j, "blink_norm", f.blink_norm, w);
  assign(j, "blink_delay_ms", f.blink_delay_ms, w);
  assign(j, "blink_fit_min_cm", f.blink_fit_min_cm, w);
  assign(j, "blink_fit_max_cm", f.blink_fit_max_cm, w);
  assign(j, "blink_view_half_angle_deg", f.blink_view_half_angle_deg, w);
  assign(j, "phi_min_deg", f.phi_min_deg, w);
  assign(j, "phi_max_deg", f.phi_max_deg, w);
  if (j.contains("delta_mode")) {
    std::string m = j.at("delta_mode").get<std::string>();
    if (m == "percent")
      f.delta_mode = DeltaMode::percent;
    else if (m == "raw")
      f.delta_mode = DeltaMode::raw;
    else
      throw ConfigError("fits.delta_mode: expected \"percent\" or \"raw\"");
  }
  assign_poly(j, "red_left", f.red_left, w);
  assign_poly(j, "red_right", f.red_right, w);
  assign(j, "red_bluegreen_slope", f.red_bluegreen_slope, w);
  assign(j, "red_bluegreen_pivot", f.red_bluegreen_pivot, w);
  assign(j, "red_bluegreen_intercept", f.red_bluegreen_intercept, w);
  assign(j, "red_fit_min_cm", f.red_fit_min_cm, w);
  assign(j, "red_fit_max_cm", f.red_fit_max_cm, w);
  assign(j, "red_ambient", f.red_ambient, w);
  assign(j, "red_rays", f.red_rays, w);
  assign(j, "red_view_angle_deg", f.red_view_angle_deg, w);
  assign(j, "red_circle_radius_frac", f.red_circle_radius_frac, w);
  if (f.red_rays < 1) throw ConfigError("fits.red_rays must be >= 1");
}

inline void apply_overrides(SensorRig& r, const nlohmann::json& j) {
  using namespace detail;
  const std::string w = "rig";
  expect_object(j, w);
  check_keys(j,
             {"ultrasound_offset", "light_left_offset", "light_right_offset",
              "light_left_facing_deg", "light_right_facing_deg",
              "reflect_offset"},
             w);
  assign_vec2(j, "ultrasound_offset", r.ultrasound_offset, w);
  assign_vec2(j, "light_left_offset", r.light_left_offset, w);
  assign_vec2(j, "light_right_offset", r.light_right_offset, w);
  assign(j, "light_left_facing_deg", r.light_left_facing_deg, w);
  assign(j, "light_right_facing_deg", r.light_right_facing_deg, w);
  assign_vec2(j, "reflect_offset", r.reflect_offset, w);
}

inline void apply_overrides(RobotShape& r, const nlohmann::json& j) {
  using namespace detail;
  const std::string w = "robot";
  expect_object(j, w);
  check_keys(j, {"length_cm", "width_cm"}, w);
  assign(j, "length_cm", r.length_cm, w);
  assign(j, "width_cm", r.width_cm, w);
  if (r.length_cm <= 0 || r.width_cm <= 0)
    throw ConfigError("robot dimensions must be positive");
}

inline void apply_overrides(SolutionParams& p, const nlohmann::json& j) {
  using namespace detail;
  const std::string w = "solutions";
  expect_object(j, w);
  check_keys(j,
             {"search_turn_speed_pct", "drive_speed_pct",
              "ultrasound_detect_cm", "blink_threshold", "blink_step_deg",
              "blink_pause_ms", "blink_abort_steps", "blink_reposition_ms",
              "push_past_ms", "lost_light_grace_ms",
              "edge_reflect_threshold"},
             w);
  assign(j, "search_turn_speed_pct", p.search_turn_speed_pct, w);
  assign(j, "drive_speed_pct", p.drive_speed_pct, w);
  assign(j, "ultrasound_detect_cm", p.ultrasound_detect_cm, w);
  assign(j, "blink_threshold", p.blink_threshold, w);
  assign(j, "blink_step_deg", p.blink_step_deg, w);
  assign(j, "blink_pause_ms", p.blink_pause_ms, w);
  assign(j, "blink_abort_steps", p.blink_abort_steps, w);
  assign(j, "blink_reposition_ms", p.blink_reposition_ms, w);
  assign(j, "push_past_ms", p.push_past_ms, w);
  assign(j, "lost_light_grace_ms", p.lost_light_grace_ms, w);
  assign(j, "edge_reflect_threshold", p.edge_reflect_threshold, w);
}

inline void apply_overrides(Calibration& cal, const nlohmann::json& j) {
  using namespace detail;
  expect_object(j, "calibration");
  check_keys(j, {"schema", "constants", "fits", "rig", "robot", "solutions"},
             "calibration");
  if (j.contains("schema") &&
      j.at("schema").get<std::string>() != "beltbot-calibration/1")
    throw ConfigError("calibration: unsupported schema '" +
                      j.at("schema").get<std::string>() + "'");
  if (j.contains("constants")) apply_overrides(cal.constants, j.at("constants"));
  if (j.contains("fits")) apply_overrides(cal.fits, j.at("fits"));
  if (j.contains("rig")) apply_overrides(cal.rig, j.at("rig"));
  if (j.contains("robot")) apply_overrides(cal.robot, j.at("robot"));
  if (j.contains("solutions")) apply_overrides(cal.solutions, j.at("solutions"));
}

/// Defaults plus the overrides found in `path`.
inline Calibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("calibration file " + path + ": " + e.what());
  }
  Calibration cal;
  apply_overrides(cal, j);
  return cal;
}

/// Full dump of the effective calibration (used by run metadata so a batch
/// can be reproduced without the original override file).
inline nlohmann::ordered_json calibration_to_json(const Calibration& cal) {
  nlohmann::ordered_json j;
  j["schema"] = "beltbot-calibration/1";
  auto& c = j["constants"];
  c["cm_per_unit"] = cal.constants.cm_per_unit;
  c["speed_slope_cm_s_per_pct"] = cal.constants.speed_slope_cm_s_per_pct;
  c["turn_slope_deg_s_per_pct"] = cal.constants.turn_slope_deg_s_per_pct;
  c["speed_saturation_pct"] = cal.constants.speed_saturation_pct;
  c["turn_saturation_pct"] = cal.constants.turn_saturation_pct;
  c["accel_limit_pp_per_tick"] = cal.constants.accel_limit_pp_per_tick;
  c["push_threshold_pct"] = cal.constants.push_threshold_pct;
  c["push_slowdown_fraction"] = cal.constants.push_slowdown_fraction;
  c["tick_rate_hz"] = cal.constants.tick_rate_hz;
  c["right_motor_gain"] = cal.constants.right_motor_gain;
  auto& f = j["fits"];
  f["reflect_white"] = cal.fits.reflect_white;
  f["reflect_cardboard"] = cal.fits.reflect_cardboard;
  f["reflect_off"] = cal.fits.reflect_off;
  f["cutoff_at_0_deg"] = cal.fits.cutoff_at_0_deg;
  f["cutoff_at_45_deg"] = cal.fits.cutoff_at_45_deg;
  f["ultrasound_slope_cm_per_cm"] = cal.fits.ultrasound_slope_cm_per_cm;
  f["blink_distance"] = cal.fits.blink_distance.coeffs;
  f["blink_view_left"] = cal.fits.blink_view_left.coeffs;
  f["blink_view_right"] = cal.fits.blink_view_right.coeffs;
  f["cube_orientation"] = cal.fits.cube_orientation.coeffs;
  f["orientation_distance"] = cal.fits.orientation_distance.coeffs;
  f["blink_norm"] = cal.fits.blink_norm;
  f["blink_delay_ms"] = cal.fits.blink_delay_ms;
  f["blink_fit_min_cm"] = cal.fits.blink_fit_min_cm;
  f["blink_fit_max_cm"] = cal.fits.blink_fit_max_cm;
  f["blink_view_half_angle_deg"] = cal.fits.blink_view_half_angle_deg;
  f["phi_min_deg"] = cal.fits.phi_min_deg;
  f["phi_max_deg"] = cal.fits.phi_max_deg;
  f["delta_mode"] =
      cal.fits.delta_mode == DeltaMode::percent ? "percent" : "raw";
  f["red_left"] = cal.fits.red_left.coeffs;
  f["red_right"] = cal.fits.red_right.coeffs;
  f["red_bluegreen_slope"] = cal.fits.red_bluegreen_slope;
  f["red_bluegreen_pivot"] = cal.fits.red_bluegreen_pivot;
  f["red_bluegreen_intercept"] = cal.fits.red_bluegreen_intercept;
  f["red_fit_min_cm"] = cal.fits.red_fit_min_cm;
  f["red_fit_max_cm"] = cal.fits.red_fit_max_cm;
  f["red_ambient"] = cal.fits.red_ambient;
  f["red_rays"] = cal.fits.red_rays;
  f["red_view_angle_deg"] = cal.fits.red_view_angle_deg;
  f["red_circle_radius_frac"] = cal.fits.red_circle_radius_frac;
  auto& r = j["rig"];
  r["ultrasound_offset"] = {cal.rig.ultrasound_offset.x,
                            cal.rig.ultrasound_offset.y};
  r["light_left_offset"] = {cal.rig.light_left_offset.x,
                            cal.rig.light_left_offset.y};
  r["light_right_offset"] = {cal.rig.light_right_offset.x,
                             cal.rig.light_right_offset.y};
  r["light_left_facing_deg"] = cal.rig.light_left_facing_deg;
  r["light_right_facing_deg"] = cal.rig.light_right_facing_deg;
  r["reflect_offset"] = {cal.rig.reflect_offset.x, cal.rig.reflect_offset.y};
  auto& rb = j["robot"];
  rb["length_cm"] = cal.robot.length_cm;
  rb["width_cm"] = cal.robot.width_cm;
  auto& s = j["solutions"];
  s["search_turn_speed_pct"] = cal.solutions.search_turn_speed_pct;
  s["drive_speed_pct"] = cal.solutions.drive_speed_pct;
  s["ultrasound_detect_cm"] = cal.solutions.ultrasound_detect_cm;
  s["blink_threshold"] = cal.solutions.blink_threshold;
  s["blink_step_deg"] = cal.solutions.blink_step_deg;
  s["blink_pause_ms"] = cal.solutions.blink_pause_ms;
  s["blink_abort_steps"] = cal.solutions.blink_abort_steps;
  s["blink_reposition_ms"] = cal.solutions.blink_reposition_ms;
  s["push_past_ms"] = cal.solutions.push_past_ms;
  s["lost_light_grace_ms"] = cal.solutions.lost_light_grace_ms;
  s["edge_reflect_threshold"] = cal.solutions.edge_reflect_threshold;
  return j;
}

inline Calibration calibration_from_json(const nlohmann::json& j) {
  Calibration cal;
  apply_overrides(cal, j);
  return cal;
}

}  // namespace beltbot
