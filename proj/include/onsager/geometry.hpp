#pragma once

#include <vector>

namespace onsager {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

using Polygon = std::vector<Vec2>;

/// Signed area (shoelace); positive for counter-clockwise vertex order.
double polygon_area(const Polygon& p);

/// Intersection of two convex polygons by half-plane clipping
/// (Sutherland-Hodgman against each edge of `clip`).
Polygon convex_intersection(const Polygon& subject, const Polygon& clip);

/// Unit-side rhombus centered at the origin with its longer diagonal on the
/// x-axis, parameterized by its smaller vertex angle p in [0, pi/2].
/// Vertices (+-cos(p/2), 0), (0, +-sin(p/2)); area sin(p).
Polygon rhombus_polygon(double p);

/// Area of the symmetric difference of the two unit-side rhombi, computed
/// by exact convex clipping: area(Rp) + area(Rq) - 2 area(Rp ^ Rq).
double rhombus_symmetric_difference_area(double p, double q);

}  // namespace onsager
