// Motor model, acceleration limiting, pose integration and the kinematic
// cube-pushing contact model.
//
// Fixed-update order within a tick (observable, therefore pinned):
//   acceleration step -> speeds -> rotate -> translate -> physics ->
//   removal check.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "beltbot/calibration.hpp"
#include "beltbot/world.hpp"

namespace beltbot {

/// Per-belt coded (commanded) and effective (post-acceleration-limit) speed
/// percentages. Effective values chase coded values at 9 pp per tick.
struct MotorState {
  double coded_left = 0.0;
  double coded_right = 0.0;
  double effective_left = 0.0;
  double effective_right = 0.0;
};

inline void set_coded(MotorState& m, double left_pct, double right_pct) {
  m.coded_left = std::clamp(left_pct, -100.0, 100.0);
  m.coded_right = std::clamp(right_pct, -100.0, 100.0);
}

/// Move each effective speed toward its coded value by at most the per-tick
/// acceleration limit.
inline void step_acceleration(MotorState& m, const CalibrationConstants& c) {
  auto chase = [&](double eff, double coded) {
    double gap = coded - eff;
    return eff + std::clamp(gap, -c.accel_limit_pp_per_tick,
                            c.accel_limit_pp_per_tick);
  };
  m.effective_left = chase(m.effective_left, m.coded_left);
  m.effective_right = chase(m.effective_right, m.coded_right);
}

/// Forward speed in cm/s: slope times the belt average, saturated at +-75 %.
/// While pushing a cube with |coded| above 20 %, the speed drops by 5 % of the
/// coded speed (never reversing the motion direction).
inline double effective_translation_speed(const MotorState& m, bool pushing,
                                          const CalibrationConstants& c) {
  double avg = (m.effective_left + m.effective_right * c.right_motor_gain) / 2.0;
  avg = std::clamp(avg, -c.speed_saturation_pct, c.speed_saturation_pct);
  double v = c.speed_slope_cm_s_per_pct * avg;
  if (pushing) {
    double coded = (m.coded_left + m.coded_right) / 2.0;
    if (std::abs(coded) > c.push_threshold_pct) {
      double drop =
          c.speed_slope_cm_s_per_pct * c.push_slowdown_fraction * std::abs(coded);
      if (v > 0.0)
        v = std::max(0.0, v - drop);
      else if (v < 0.0)
        v = std::min(0.0, v + drop);
    }
  }
  return v;
}

/// Turn rate in deg/s (positive CCW): slope times the belt difference, each
/// side's contribution saturated at 60 %.
inline double effective_angular_speed(const MotorState& m,
                                      const CalibrationConstants& c) {
  double r = std::clamp(m.effective_right * c.right_motor_gain,
                        -c.turn_saturation_pct, c.turn_saturation_pct);
  double l = std::clamp(m.effective_left, -c.turn_saturation_pct,
                        c.turn_saturation_pct);
  return c.turn_slope_deg_s_per_pct * (r - l);
}

/// Rotate, then translate along the new heading.
inline Pose integrate_pose(Pose p, double translation_cm_s,
                           double angular_deg_s, double dt_s) {
  p.heading_deg = wrap_deg_360(p.heading_deg + angular_deg_s * dt_s);
  Vec2 dir = heading_dir(p.heading_deg);
  p.x += translation_cm_s * dt_s * dir.x;
  p.y += translation_cm_s * dt_s * dir.y;
  return p;
}

inline Obb robot_obb(const Pose& p, const RobotShape& shape) {
  return make_obb(p.position(), p.heading_deg, shape.length_cm / 2.0,
                  shape.width_cm / 2.0);
}

/// Task failure: any footprint corner off the cardboard (boundary counts
/// as inside).
inline bool robot_failed(const Arena& a, const Pose& robot,
                         const RobotShape& shape) {
  for (Vec2 corner : robot_obb(robot, shape).corners())
    if (classify_point(a, corner) == SurfaceKind::Off) return true;
  return false;
}

struct PhysicsOutcome {
  bool robot_contact = false;
  std::vector<int> newly_removed;  // ascending cube ids
};

namespace detail {

// Push `moving` out of `fixed` along `dir` (or a fallback direction when the
// geometry cannot separate that way). Returns the applied displacement.
inline Vec2 push_out(const Obb& fixed, const Obb& moving, Vec2 dir) {
  constexpr double kSlack = 1e-9;
  Vec2 off = moving.center - fixed.center;
  Vec2 d = normalized_or(dir, normalized_or(off, {1.0, 0.0}));
  double t = separation_along(fixed, moving, d);
  if (t < 0.0) {
    d = normalized_or(off, {1.0, 0.0});
    t = separation_along(fixed, moving, d);
    if (t < 0.0) t = 0.0;
  }
  return d * (t + kSlack);
}

}  // namespace detail

/// One tick of the contact model:
///  - robot rectangle vs cube squares, ascending id: overlapping cubes are
///    pushed out along the robot's motion direction and acquire the robot's
///    contact velocity;
///  - cube vs cube pairs, ascending (i, j): the faster cube pushes the other;
///  - untouched cubes drift with their residual velocity, decaying as
///    v <- v * exp(-drag * dt);
///  - cubes fully outside the white area become removed (and stay removed).
inline PhysicsOutcome step_physics(WorldState& w, const Obb& robot_box,
                                   Vec2 robot_velocity, double dt_s) {
  PhysicsOutcome out;
  std::vector<char> contacted(w.cubes.size(), 0);

  for (std::size_t i = 0; i < w.cubes.size(); ++i) {
    Cube& c = w.cubes[i];
    if (c.removed) continue;
    if (obb_penetration(robot_box, cube_obb(c)) > 0.0) {
      c.position += detail::push_out(robot_box, cube_obb(c), robot_velocity);
      c.velocity = robot_velocity;
      contacted[i] = 1;
      out.robot_contact = true;
    }
  }

  for (std::size_t i = 0; i < w.cubes.size(); ++i) {
    if (w.cubes[i].removed) continue;
    for (std::size_t j = i + 1; j < w.cubes.size(); ++j) {
      if (w.cubes[j].removed) continue;
      if (obb_penetration(cube_obb(w.cubes[i]), cube_obb(w.cubes[j])) <= 0.0)
        continue;
      bool i_pushes = norm(w.cubes[i].velocity) >= norm(w.cubes[j].velocity);
      std::size_t p = i_pushes ? i : j;
      std::size_t q = i_pushes ? j : i;
      w.cubes[q].position += detail::push_out(
          cube_obb(w.cubes[p]), cube_obb(w.cubes[q]), w.cubes[p].velocity);
      w.cubes[q].velocity = w.cubes[p].velocity;
      contacted[q] = 1;
    }
  }

  for (std::size_t i = 0; i < w.cubes.size(); ++i) {
    Cube& c = w.cubes[i];
    if (c.removed || contacted[i]) continue;
    if (c.velocity.x != 0.0 || c.velocity.y != 0.0) {
      c.position += c.velocity * dt_s;
      double decay = std::exp(-c.drag_per_s * dt_s);
      c.velocity = c.velocity * decay;
    }
  }

  out.newly_removed = update_removals(w);
  return out;
}

}  // namespace beltbot
