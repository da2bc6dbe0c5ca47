#include "onsager/geometry.hpp"

#include <cmath>

namespace onsager {

double polygon_area(const Polygon& p) {
  double a = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % n];
    a += u.x * v.y - v.x * u.y;
  }
  return 0.5 * a;
}

namespace {

double side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Vec2 intersect(const Vec2& a, const Vec2& b, const Vec2& p, const Vec2& q) {
  double a1 = side(p, q, a);
  double a2 = side(p, q, b);
  double t = a1 / (a1 - a2);
  return Vec2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

}  // namespace

Polygon convex_intersection(const Polygon& subject, const Polygon& clip) {
  Polygon out = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Vec2& p = clip[e];
    const Vec2& q = clip[(e + 1) % m];
    Polygon in;
    in.swap(out);
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& cur = in[i];
      const Vec2& nxt = in[(i + 1) % n];
      double scur = side(p, q, cur);
      double snxt = side(p, q, nxt);
      if (scur >= 0.0) {
        out.push_back(cur);
        if (snxt < 0.0) out.push_back(intersect(cur, nxt, p, q));
      } else if (snxt >= 0.0) {
        out.push_back(intersect(cur, nxt, p, q));
      }
    }
  }
  return out;
}

Polygon rhombus_polygon(double p) {
  double c = std::cos(0.5 * p);
  double s = std::sin(0.5 * p);
  return Polygon{{c, 0.0}, {0.0, s}, {-c, 0.0}, {0.0, -s}};
}

double rhombus_symmetric_difference_area(double p, double q) {
  Polygon rp = rhombus_polygon(p);
  Polygon rq = rhombus_polygon(q);
  double ap = polygon_area(rp);
  double aq = polygon_area(rq);
  Polygon inter = convex_intersection(rp, rq);
  double ai = inter.size() >= 3 ? polygon_area(inter) : 0.0;
  return ap + aq - 2.0 * ai;
}

}  // namespace onsager
