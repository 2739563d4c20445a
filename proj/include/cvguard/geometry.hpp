#pragma once

#include <cmath>
#include <compare>

namespace cvguard {

// Local planar frame, meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double k) { return {a.x * k, a.y * k}; }
  friend constexpr Vec2 operator*(double k, Vec2 a) { return {a.x * k, a.y * k}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Directed line segment from `start` to `end`.
struct Axis {
  Vec2 start;
  Vec2 end;

  double length() const { return distance(start, end); }
  Vec2 direction() const {
    const double len = length();
    return len > 0.0 ? (end - start) * (1.0 / len) : Vec2{};
  }
  /// Point at longitudinal coordinate s (meters from start).
  Vec2 at(double s) const { return start + direction() * s; }
  /// Longitudinal coordinate of the projection of p.
  double project(Vec2 p) const { return dot(p - start, direction()); }
  /// Perpendicular distance from p to the segment (clamped to its ends).
  double distance_to(Vec2 p) const;
};

/// Intersection of two infinite lines through the axes; nullopt-like flag via
/// `ok` when they are parallel.
struct Crossing {
  bool ok = false;
  Vec2 point;
  double s_first = 0.0;   // longitudinal coordinate on the first axis
  double s_second = 0.0;  // longitudinal coordinate on the second axis
};

Crossing intersect(const Axis& a, const Axis& b);

}  // namespace cvguard
