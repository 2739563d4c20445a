#include "cvguard/geometry.hpp"

#include <algorithm>

namespace cvguard {

double Axis::distance_to(Vec2 p) const {
  const double len = length();
  if (len <= 0.0) return distance(p, start);
  const double s = std::clamp(project(p), 0.0, len);
  return distance(p, at(s));
}

Crossing intersect(const Axis& a, const Axis& b) {
  const Vec2 da = a.end - a.start;
  const Vec2 db = b.end - b.start;
  const double denom = da.x * db.y - da.y * db.x;
  if (std::abs(denom) < 1e-12) return {};
  const Vec2 w = b.start - a.start;
  const double ta = (w.x * db.y - w.y * db.x) / denom;
  const double tb = (w.x * da.y - w.y * da.x) / denom;
  Crossing c;
  c.ok = ta >= 0.0 && ta <= 1.0 && tb >= 0.0 && tb <= 1.0;
  c.point = a.start + da * ta;
  c.s_first = ta * a.length();
  c.s_second = tb * b.length();
  return c;
}

}  // namespace cvguard
