// 2D vector / angle / oriented-box helpers shared by the world, dynamics and
// sensor models. Distances are centimeters, angles degrees, headings CCW with
// 0 along +x.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace beltbot {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

inline Vec2 normalized_or(Vec2 a, Vec2 fallback) {
  double n = norm(a);
  return n > 1e-12 ? Vec2{a.x / n, a.y / n} : fallback;
}

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Unit vector for a heading in degrees.
inline Vec2 heading_dir(double deg) {
  double r = deg_to_rad(deg);
  return {std::cos(r), std::sin(r)};
}

/// Wrap into [0, 360).
inline double wrap_deg_360(double a) {
  double w = a - 360.0 * std::floor(a / 360.0);
  return w >= 360.0 ? w - 360.0 : w;
}

/// Wrap into (-180, 180].
inline double wrap_deg_180(double a) {
  double w = wrap_deg_360(a);
  return w > 180.0 ? w - 360.0 : w;
}

/// Signed CCW angle from `from` to `to`, in (-180, 180].
inline double signed_angle_deg(Vec2 from, Vec2 to) {
  return rad_to_deg(std::atan2(cross(from, to), dot(from, to)));
}

/// Fold an angle by the cube's 90-degree base-plate symmetry into [0, 45]:
/// the smallest angle to any of the four base-plate normals.
inline double fold_deg_45(double a) {
  double m = std::fmod(wrap_deg_360(a), 90.0);
  return std::min(m, 90.0 - m);
}

/// Rotate a robot/cube-frame offset into the world frame.
inline Vec2 rotate_deg(Vec2 v, double deg) {
  double r = deg_to_rad(deg);
  double c = std::cos(r), s = std::sin(r);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Position (cm) plus heading (degrees, CCW, 0 = +x) in the arena frame.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading_deg = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 forward() const { return heading_dir(heading_deg); }
  /// Robot-frame offset (x forward, y left) mapped to the world frame.
  Vec2 local_to_world(Vec2 offset) const {
    return position() + rotate_deg(offset, heading_deg);
  }
};

/// Oriented bounding box: center, unit x-axis, half extents along the box
/// axes. Robots put the long side on ux (forward).
struct Obb {
  Vec2 center;
  Vec2 ux{1.0, 0.0};
  double hx = 0.0;
  double hy = 0.0;

  Vec2 uy() const { return perp(ux); }

  double extent_along(Vec2 axis) const {
    return hx * std::abs(dot(ux, axis)) + hy * std::abs(dot(uy(), axis));
  }

  std::array<Vec2, 4> corners() const {
    Vec2 ex = ux * hx, ey = uy() * hy;
    return {center + ex + ey, center - ex + ey, center - ex - ey,
            center + ex - ey};
  }
};

inline Obb make_obb(Vec2 center, double heading_deg, double half_len,
                    double half_wid) {
  return {center, heading_dir(heading_deg), half_len, half_wid};
}

/// SAT penetration depth: > 0 overlapping, == 0 touching, < 0 separated.
inline double obb_penetration(const Obb& a, const Obb& b) {
  Vec2 off = b.center - a.center;
  double depth = std::numeric_limits<double>::infinity();
  for (Vec2 axis : {a.ux, a.uy(), b.ux, b.uy()}) {
    double overlap =
        a.extent_along(axis) + b.extent_along(axis) - std::abs(dot(off, axis));
    depth = std::min(depth, overlap);
  }
  return depth;
}

/// Distance `moving` must travel along unit direction `dir` until it no
/// longer overlaps `fixed`. Returns 0 if already separated, -1 if no axis
/// separates along `dir` (caller picks another direction).
inline double separation_along(const Obb& fixed, const Obb& moving, Vec2 dir) {
  Vec2 off = moving.center - fixed.center;
  double best = std::numeric_limits<double>::infinity();
  for (Vec2 axis : {fixed.ux, fixed.uy(), moving.ux, moving.uy()}) {
    double proj = dot(off, axis);
    double overlap =
        fixed.extent_along(axis) + moving.extent_along(axis) - std::abs(proj);
    if (overlap <= 0.0) return 0.0;
    double da = dot(dir, axis);
    double grow = proj > 0.0 ? da : proj < 0.0 ? -da : std::abs(da);
    if (grow > 1e-12) best = std::min(best, overlap / grow);
  }
  return std::isfinite(best) ? best : -1.0;
}

/// Ray (o + t*u, t >= 0) vs segment [a, b]; parameter t of the hit.
inline std::optional<double> ray_segment_t(Vec2 o, Vec2 u, Vec2 a, Vec2 b) {
  Vec2 d = b - a;
  double denom = cross(u, d);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  Vec2 ao = a - o;
  double t = cross(ao, d) / denom;
  double s = cross(ao, u) / denom;
  if (t < 0.0 || s < 0.0 || s > 1.0) return std::nullopt;
  return t;
}

/// Ray vs circle; nearest hit parameter. A ray starting inside reports 0.
inline std::optional<double> ray_circle_t(Vec2 o, Vec2 u, Vec2 c, double r) {
  Vec2 m = o - c;
  double b = dot(m, u);
  double q = dot(m, m) - r * r;
  double disc = b * b - q;
  if (disc < 0.0) return std::nullopt;
  double root = std::sqrt(disc);
  double t0 = -b - root;
  if (t0 >= 0.0) return t0;
  if (-b + root >= 0.0) return 0.0;
  return std::nullopt;
}

}  // namespace beltbot
