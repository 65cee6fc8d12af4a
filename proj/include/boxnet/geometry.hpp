#pragma once

#include <cmath>

namespace boxnet {

/// Planar position in map units; one grid cell is 1.0 wide.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed segment. A zero-length segment behaves as the point `a`.
struct Segment {
  Point a;
  Point b;
};

namespace geometry {

inline constexpr double kPositionEps = 1e-6;
inline constexpr double kCollinearEps = 1e-9;
inline constexpr double kReach = 1.0;

inline bool is_finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Chebyshev distance at most `eps`.
bool points_equal(const Point& p, const Point& q, double eps = kPositionEps);

/// Signed area of the parallelogram (b - a) x (c - a).
double cross(const Point& a, const Point& b, const Point& c);

/// True when the closed segments share at least one point. Orientation values
/// with magnitude <= `eps` count as collinear, so endpoint contact and
/// collinear overlap are both reported as intersections.
bool segments_intersect(const Segment& s1, const Segment& s2, double eps = kCollinearEps);

/// Open square |dx| < 1, |dy| < 1 around the base.
bool in_reach_band(const Point& base, const Point& target);

double squared_distance(const Point& p, const Point& q);

}  // namespace geometry
}  // namespace boxnet
