#include "boxnet/geometry.hpp"

#include <algorithm>

namespace boxnet::geometry {

bool points_equal(const Point& p, const Point& q, double eps) {
  return std::max(std::abs(p.x - q.x), std::abs(p.y - q.y)) <= eps;
}

double cross(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

namespace {

int orientation(const Point& a, const Point& b, const Point& c, double eps) {
  const double v = cross(a, b, c);
  if (std::abs(v) <= eps) return 0;
  return v > 0 ? 1 : -1;
}

// p is known to be collinear with [a, b]; check it falls inside the bounding box.
bool within_box(const Point& a, const Point& b, const Point& p, double eps) {
  return p.x >= std::min(a.x, b.x) - eps && p.x <= std::max(a.x, b.x) + eps &&
         p.y >= std::min(a.y, b.y) - eps && p.y <= std::max(a.y, b.y) + eps;
}

bool is_degenerate(const Segment& s, double eps) { return points_equal(s.a, s.b, eps); }

}  // namespace

bool segments_intersect(const Segment& s1, const Segment& s2, double eps) {
  const bool d1 = is_degenerate(s1, eps);
  const bool d2 = is_degenerate(s2, eps);
  if (d1 && d2) return points_equal(s1.a, s2.a, eps);
  if (d1) return orientation(s2.a, s2.b, s1.a, eps) == 0 && within_box(s2.a, s2.b, s1.a, eps);
  if (d2) return orientation(s1.a, s1.b, s2.a, eps) == 0 && within_box(s1.a, s1.b, s2.a, eps);

  const int o1 = orientation(s1.a, s1.b, s2.a, eps);
  const int o2 = orientation(s1.a, s1.b, s2.b, eps);
  const int o3 = orientation(s2.a, s2.b, s1.a, eps);
  const int o4 = orientation(s2.a, s2.b, s1.b, eps);

  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;

  if (o1 == 0 && within_box(s1.a, s1.b, s2.a, eps)) return true;
  if (o2 == 0 && within_box(s1.a, s1.b, s2.b, eps)) return true;
  if (o3 == 0 && within_box(s2.a, s2.b, s1.a, eps)) return true;
  if (o4 == 0 && within_box(s2.a, s2.b, s1.b, eps)) return true;
  return false;
}

bool in_reach_band(const Point& base, const Point& target) {
  return std::abs(target.x - base.x) < kReach && std::abs(target.y - base.y) < kReach;
}

double squared_distance(const Point& p, const Point& q) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  return dx * dx + dy * dy;
}

}  // namespace boxnet::geometry
