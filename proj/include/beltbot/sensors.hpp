// Sensor emulation: downward reflection, ultrasound with orientation-dependent
// cutoff, the four-factor blink model with its 500 ms delay line, and the
// 21-raycast red-reflection model.
//
// All reads are pure functions of (world, robot pose, calibration) except the
// delay line, which the runtime owns and advances once per tick.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "beltbot/calibration.hpp"
#include "beltbot/world.hpp"

namespace beltbot {

enum class SensorSide { left, right };

inline const char* to_string(SensorSide s) {
  return s == SensorSide::left ? "left" : "right";
}

// --- fit evaluation ----------------------------------------------------------

/// Distance factor D(d); d held constant outside the measured domain.
inline double eval_blink_distance(const SensorFits& f, double d_cm) {
  return f.blink_distance.eval(
      std::clamp(d_cm, f.blink_fit_min_cm, f.blink_fit_max_cm));
}

/// Normalized viewing-angle factor beta(alpha) for one sensor side; zero
/// outside the view half-angle, never negative.
inline double eval_blink_view(const SensorFits& f, SensorSide side,
                              double alpha_deg) {
  if (std::abs(alpha_deg) > f.blink_view_half_angle_deg) return 0.0;
  const Polynomial& p =
      side == SensorSide::left ? f.blink_view_left : f.blink_view_right;
  return std::max(0.0, p.eval(alpha_deg) / f.blink_norm);
}

/// Cube-orientation correction phi(angle); the fit value, unclamped.
inline double eval_cube_orientation(const SensorFits& f, double phi_deg) {
  return (f.blink_norm - f.cube_orientation.eval(phi_deg)) / f.blink_norm;
}

/// delta(d) as used in the correction product, per the configured mode.
inline double eval_orientation_distance(const SensorFits& f, double d_cm) {
  double raw = f.orientation_distance.eval(
      std::clamp(d_cm, f.blink_fit_min_cm, f.blink_fit_max_cm));
  return f.delta_mode == DeltaMode::percent ? std::abs(raw) / 100.0 : raw;
}

inline double eval_red_fit(const SensorFits& f, CubeColor color,
                           SensorSide side, double d_cm) {
  double d = std::clamp(d_cm, f.red_fit_min_cm, f.red_fit_max_cm);
  double v;
  if (color == CubeColor::red)
    v = (side == SensorSide::left ? f.red_left : f.red_right).eval(d);
  else
    v = f.bluegreen(d);
  return std::max(0.0, v);
}

// --- sensor poses ------------------------------------------------------------

inline Vec2 ultrasound_position(const Pose& robot, const SensorRig& rig) {
  return robot.local_to_world(rig.ultrasound_offset);
}

inline Vec2 light_sensor_position(const Pose& robot, const SensorRig& rig,
                                  SensorSide side) {
  return robot.local_to_world(side == SensorSide::left
                                  ? rig.light_left_offset
                                  : rig.light_right_offset);
}

inline double light_sensor_facing_deg(const Pose& robot, const SensorRig& rig,
                                      SensorSide side) {
  return robot.heading_deg + (side == SensorSide::left
                                  ? rig.light_left_facing_deg
                                  : rig.light_right_facing_deg);
}

// --- geometry factors --------------------------------------------------------

/// The geometric quantities feeding the sensor fits, for one sensor pose and
/// one target:
///   d         sensor-to-target distance (cm)
///   alpha     signed angle from sensor forward to the target direction,
///             negative when the target lies to the LEFT of forward
///   gamma     angle between sensor forward and the nearest cube base-plate
///             normal, folded into [0, 45]
///   phi       same fold for the sensor-to-target direction
/// gamma/phi are 0 when no cube orientation applies (fixed lights).
struct GeometryAngles {
  double d_cm = 0.0;
  double alpha_deg = 0.0;
  double gamma_deg = 0.0;
  double phi_deg = 0.0;
};

inline GeometryAngles geometry_angles(Vec2 sensor_pos, double facing_deg,
                                      Vec2 target_pos,
                                      std::optional<double> cube_heading_deg) {
  GeometryAngles g;
  Vec2 to = target_pos - sensor_pos;
  g.d_cm = norm(to);
  Vec2 fwd = heading_dir(facing_deg);
  double bearing_ccw = g.d_cm > 1e-12 ? signed_angle_deg(fwd, to) : 0.0;
  g.alpha_deg = -bearing_ccw;  // left of forward => negative
  if (cube_heading_deg) {
    g.gamma_deg = fold_deg_45(facing_deg - *cube_heading_deg);
    double los_deg = g.d_cm > 1e-12 ? rad_to_deg(std::atan2(to.y, to.x))
                                    : facing_deg;
    g.phi_deg = fold_deg_45(los_deg - *cube_heading_deg);
  }
  return g;
}

// --- downward reflection sensor ----------------------------------------------

inline double read_reflection(const WorldState& w, const Pose& robot,
                              const Calibration& cal) {
  switch (classify_point(w.arena,
                         robot.local_to_world(cal.rig.reflect_offset))) {
    case SurfaceKind::White: return cal.fits.reflect_white;
    case SurfaceKind::Cardboard: return cal.fits.reflect_cardboard;
    default: return cal.fits.reflect_off;
  }
}

// --- ultrasound distance sensor ----------------------------------------------

/// Center-to-center distance of the nearest cube whose bearing lies within
/// the orientation-dependent cutoff angle; none when no cube qualifies.
inline std::optional<double> read_ultrasound(const WorldState& w,
                                             const Pose& robot,
                                             const Calibration& cal) {
  Vec2 spos = ultrasound_position(robot, cal.rig);
  std::optional<double> best;
  for (const Cube& c : w.cubes) {
    if (c.removed) continue;
    GeometryAngles g =
        geometry_angles(spos, robot.heading_deg, c.position, c.heading_deg);
    if (std::abs(g.alpha_deg) > cal.fits.cutoff_deg(g.gamma_deg)) continue;
    if (!best || g.d_cm < *best) best = g.d_cm;
  }
  if (best) *best *= cal.fits.ultrasound_slope_cm_per_cm;
  return best;
}

// --- blink light sensor --------------------------------------------------------

/// Raw (undelayed) blink value for one sensor side: max over active lights of
/// D(d)*beta(alpha), reduced by the cube-orientation correction when the
/// light sits in a cube whose folded base-plate angle is in the correction
/// window. Per-light values are clamped into [0, D*beta].
inline double blink_raw(const WorldState& w, const Pose& robot,
                        SensorSide side, const Calibration& cal) {
  const SensorFits& f = cal.fits;
  Vec2 spos = light_sensor_position(robot, cal.rig, side);
  double facing = light_sensor_facing_deg(robot, cal.rig, side);
  double best = 0.0;
  for (const BlinkLight& l : w.lights) {
    std::optional<Vec2> pos = light_position(w, l);
    if (!pos) continue;  // light in a removed cube
    const Cube* cube = light_cube(w, l);
    GeometryAngles g = geometry_angles(
        spos, facing, *pos,
        cube ? std::optional<double>(cube->heading_deg) : std::nullopt);
    double base = eval_blink_distance(f, g.d_cm) *
                  eval_blink_view(f, side, g.alpha_deg);
    if (base <= 0.0) continue;
    double value = base;
    if (cube && g.phi_deg >= f.phi_min_deg && g.phi_deg <= f.phi_max_deg) {
      double corr = base * eval_cube_orientation(f, g.phi_deg) *
                    eval_orientation_distance(f, g.d_cm);
      value = std::clamp(base - corr, 0.0, base);
    }
    best = std::max(best, value);
  }
  return best;
}

/// The value stored in the delay array each tick: the larger of the two
/// sensor sides.
inline double blink_raw_combined(const WorldState& w, const Pose& robot,
                                 const Calibration& cal) {
  return std::max(blink_raw(w, robot, SensorSide::left, cal),
                  blink_raw(w, robot, SensorSide::right, cal));
}

/// Ring buffer holding the past raw blink values; read() yields the value
/// pushed `size` ticks ago (0 during warm-up).
class BlinkDelayLine {
 public:
  explicit BlinkDelayLine(int length = 25)
      : buf_(static_cast<std::size_t>(std::max(1, length)), 0.0) {}

  double read() const { return buf_[idx_]; }

  void push(double v) {
    buf_[idx_] = v;
    idx_ = (idx_ + 1) % buf_.size();
  }

  int length() const { return static_cast<int>(buf_.size()); }

 private:
  std::vector<double> buf_;
  std::size_t idx_ = 0;
};

// --- colour (red) reflection sensor --------------------------------------------

/// Raycast targets of one cube: the crossed walls (footprint diagonals) and
/// the central circle collider.
inline std::optional<double> raycast_cube(Vec2 origin, Vec2 dir,
                                          const Cube& c,
                                          double circle_radius_frac) {
  std::array<Vec2, 4> k = cube_obb(c).corners();
  std::optional<double> best;
  auto consider = [&](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  consider(ray_segment_t(origin, dir, k[0], k[2]));
  consider(ray_segment_t(origin, dir, k[1], k[3]));
  consider(ray_circle_t(origin, dir, c.position,
                        circle_radius_frac * c.side_cm / 2.0));
  return best;
}

/// Mean of 21 equally spaced raycast contributions across the sensor's view
/// angle. A ray hitting a cube contributes the colour fit of the hit
/// distance; a miss contributes the ambient constant.
inline double read_red(const WorldState& w, const Pose& robot, SensorSide side,
                       const Calibration& cal) {
  const SensorFits& f = cal.fits;
  Vec2 spos = light_sensor_position(robot, cal.rig, side);
  double facing = light_sensor_facing_deg(robot, cal.rig, side);
  int n = f.red_rays;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    double ang = n == 1 ? facing
                        : facing - f.red_view_angle_deg / 2.0 +
                              f.red_view_angle_deg * k / (n - 1);
    Vec2 dir = heading_dir(ang);
    std::optional<double> best_t;
    const Cube* best_cube = nullptr;
    for (const Cube& c : w.cubes) {
      if (c.removed) continue;
      std::optional<double> t =
          raycast_cube(spos, dir, c, f.red_circle_radius_frac);
      if (t && (!best_t || *t < *best_t)) {
        best_t = t;
        best_cube = &c;
      }
    }
    sum += best_t ? eval_red_fit(f, best_cube->color, side, *best_t)
                  : f.red_ambient;
  }
  return sum / n;
}

}  // namespace beltbot
