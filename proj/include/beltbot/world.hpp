// Arena geometry, surface classification, cube bookkeeping and the
// task-state predicates. World frame: origin at the cardboard center,
// x right, y up, units cm.
#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "beltbot/geometry.hpp"

namespace beltbot {

enum class SurfaceKind { White, Cardboard, Off };

inline const char* to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::White: return "white";
    case SurfaceKind::Cardboard: return "cardboard";
    default: return "off";
  }
}

/// Cardboard playground with a centered white rectangle inside the fringe.
struct Arena {
  double cardboard_width = 150.0;
  double cardboard_height = 120.0;
  double fringe = 17.0;

  double white_width() const { return cardboard_width - 2.0 * fringe; }
  double white_height() const { return cardboard_height - 2.0 * fringe; }
  double white_half_w() const { return white_width() / 2.0; }
  double white_half_h() const { return white_height() / 2.0; }
  double half_w() const { return cardboard_width / 2.0; }
  double half_h() const { return cardboard_height / 2.0; }
};

inline Arena make_arena(double cardboard_width, double cardboard_height,
                        double fringe) {
  if (cardboard_width <= 0.0 || cardboard_height <= 0.0)
    throw std::invalid_argument("arena dimensions must be positive");
  if (fringe < 0.0)
    throw std::invalid_argument("arena fringe must be non-negative");
  if (cardboard_width - 2.0 * fringe <= 0.0 ||
      cardboard_height - 2.0 * fringe <= 0.0)
    throw std::invalid_argument(
        "arena fringe leaves no white area (need fringe < half of each "
        "dimension)");
  return Arena{cardboard_width, cardboard_height, fringe};
}

/// Boundary points count as the inner region, so the three kinds partition
/// the plane.
inline SurfaceKind classify_point(const Arena& a, Vec2 p) {
  if (std::abs(p.x) <= a.white_half_w() && std::abs(p.y) <= a.white_half_h())
    return SurfaceKind::White;
  if (std::abs(p.x) <= a.half_w() && std::abs(p.y) <= a.half_h())
    return SurfaceKind::Cardboard;
  return SurfaceKind::Off;
}

enum class CubeColor { red, green, blue };

inline const char* to_string(CubeColor c) {
  switch (c) {
    case CubeColor::red: return "red";
    case CubeColor::green: return "green";
    default: return "blue";
  }
}

inline CubeColor cube_color_from_string(const std::string& s) {
  if (s == "red") return CubeColor::red;
  if (s == "green") return CubeColor::green;
  if (s == "blue") return CubeColor::blue;
  throw std::invalid_argument("unknown cube color: " + s);
}

struct Cube {
  int id = 0;
  CubeColor color = CubeColor::red;
  Vec2 position;
  double heading_deg = 0.0;
  double side_cm = 5.0;
  double drag_per_s = 5.0;
  Vec2 velocity;  // residual push velocity, cm/s
  bool removed = false;
};

inline Obb cube_obb(const Cube& c) {
  return make_obb(c.position, c.heading_deg, c.side_cm / 2.0, c.side_cm / 2.0);
}

/// True iff all four footprint corners classify as non-White.
inline bool cube_fully_outside_white(const Arena& a, const Cube& c) {
  for (Vec2 corner : cube_obb(c).corners())
    if (classify_point(a, corner) == SurfaceKind::White) return false;
  return true;
}

/// A blink light is either fixed on the playground or sits in a cube's
/// top cut-out (and then moves with the cube and dies with its removal).
struct BlinkLight {
  std::optional<int> cube_id;
  Vec2 position;  // used when not cube-attached
};

struct WorldState {
  Arena arena;
  std::vector<Cube> cubes;  // ascending unique ids
  std::vector<BlinkLight> lights;

  const Cube* find_cube(int id) const {
    for (const Cube& c : cubes)
      if (c.id == id) return &c;
    return nullptr;
  }
};

/// Position of a light if it is active (fixed, or inside a live cube).
inline std::optional<Vec2> light_position(const WorldState& w,
                                          const BlinkLight& l) {
  if (!l.cube_id) return l.position;
  const Cube* c = w.find_cube(*l.cube_id);
  if (c == nullptr || c->removed) return std::nullopt;
  return c->position;
}

/// Cube carrying a light, when attached; nullptr for fixed lights.
inline const Cube* light_cube(const WorldState& w, const BlinkLight& l) {
  return l.cube_id ? w.find_cube(*l.cube_id) : nullptr;
}

inline bool task_complete(const WorldState& w) {
  for (const Cube& c : w.cubes)
    if (!c.removed) return false;
  return true;
}

/// Flags cubes that left the white area; returns newly removed ids in
/// ascending order. Removal never reverts within an episode.
inline std::vector<int> update_removals(WorldState& w) {
  std::vector<int> removed;
  for (Cube& c : w.cubes) {
    if (c.removed) continue;
    if (cube_fully_outside_white(w.arena, c)) {
      c.removed = true;
      c.velocity = {};
      removed.push_back(c.id);
    }
  }
  return removed;
}

}  // namespace beltbot
