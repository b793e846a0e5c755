// The three reference controllers used for verification. Each uses only the
// public Robot API; negative turn angles are clockwise.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beltbot/calibration.hpp"
#include "beltbot/runtime.hpp"

namespace beltbot {

/// Drives straight whenever the ultrasound sensor sees a cube within the
/// detection distance, otherwise turns clockwise on the spot. Boundary safety
/// comes from cube auto-removal: a detected cube is always on the white area.
inline ControllerTask ultrasound1_run(Robot& r, SolutionParams p) {
  for (;;) {
    std::optional<double> d = r.read_ultrasound();
    if (d && *d < p.ultrasound_detect_cm)
      r.set_motor(p.drive_speed_pct, p.drive_speed_pct);
    else
      r.set_motor(p.search_turn_speed_pct, -p.search_turn_speed_pct);
    co_await r.yield_tick();
  }
}

/// Turns clockwise until a cube is detected, keeps turning while the reading
/// improves (to fully face the cube), then drives straight to the white-area
/// edge, pushes half a second past it and resumes the clockwise search. Does
/// not react to missed or lost cubes.
inline ControllerTask ultrasound2_run(Robot& r, SolutionParams p) {
  for (;;) {
    std::optional<double> d;
    for (;;) {
      d = r.read_ultrasound();
      if (d && *d < p.ultrasound_detect_cm) break;
      r.set_motor(p.search_turn_speed_pct, -p.search_turn_speed_pct);
      co_await r.yield_tick();
    }

    double prev = *d;
    for (;;) {
      r.set_motor(p.search_turn_speed_pct, -p.search_turn_speed_pct);
      co_await r.yield_tick();
      d = r.read_ultrasound();
      if (!d || *d >= prev) break;
      prev = *d;
    }

    // Edge arrival is the white->cardboard transition of the downward
    // sensor (it may start the drive on the fringe after a previous push).
    bool seen_white = false;
    for (;;) {
      double refl = r.read_reflection();
      if (refl > p.edge_reflect_threshold)
        seen_white = true;
      else if (seen_white)
        break;
      r.set_motor(p.drive_speed_pct, p.drive_speed_pct);
      co_await r.yield_tick();
    }
    co_await r.wait(p.push_past_ms);  // motors hold, pushing the cube clear
  }
}

/// Searches in clockwise 20-degree steps with one-second pauses (long enough
/// for the delayed blink value to settle), approaching when the blink value
/// exceeds the threshold. After a full fruitless rotation it drives straight
/// for two seconds to search elsewhere. The approach ends at the white-area
/// edge or after the light has been unseen for the grace period.
inline ControllerTask blink_run(Robot& r, SolutionParams p) {
  for (;;) {
    int steps = 0;
    bool found = false;
    for (;;) {
      if (r.read_blink() > p.blink_threshold) {
        found = true;
        break;
      }
      if (steps >= p.blink_abort_steps) break;
      co_await r.turn(-p.blink_step_deg, p.search_turn_speed_pct);
      co_await r.wait(p.blink_pause_ms);
      ++steps;
    }

    if (!found) {
      r.set_motor(p.drive_speed_pct, p.drive_speed_pct);
      co_await r.wait(p.blink_reposition_ms);
      r.set_motor(0.0, 0.0);
      continue;
    }

    double lost_ms = 0.0;
    bool seen_white = false;
    for (;;) {
      r.set_motor(p.drive_speed_pct, p.drive_speed_pct);
      co_await r.yield_tick();
      double refl = r.read_reflection();
      if (refl > p.edge_reflect_threshold)
        seen_white = true;
      else if (seen_white)
        break;
      if (r.read_blink() > p.blink_threshold)
        lost_ms = 0.0;
      else
        lost_ms += r.tick_ms();
      if (lost_ms > p.lost_light_grace_ms) break;
    }
    r.set_motor(0.0, 0.0);
  }
}

inline const std::vector<std::string>& solution_names() {
  static const std::vector<std::string> names = {"ultrasound1", "ultrasound2",
                                                 "blink"};
  return names;
}

/// Controller factory by CLI name.
inline Controller make_solution(std::string_view name,
                                const SolutionParams& params = {}) {
  if (name == "ultrasound1")
    return [params](Robot& r) { return ultrasound1_run(r, params); };
  if (name == "ultrasound2")
    return [params](Robot& r) { return ultrasound2_run(r, params); };
  if (name == "blink")
    return [params](Robot& r) { return blink_run(r, params); };
  throw ConfigError("unknown solution '" + std::string(name) +
                    "' (expected ultrasound1, ultrasound2 or blink)");
}

}  // namespace beltbot
