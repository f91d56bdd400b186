#include "mrgrank/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrgrank/error.hpp"

namespace mrgrank {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
double distance(Vec2 a, Vec2 b) { return norm(a - b); }

bool Box::contains(Vec2 p, double eps) const {
  return p.x >= x0 - eps && p.x <= x1 + eps && p.y >= y0 - eps && p.y <= y1 + eps;
}

Polygon box_polygon(const Box& box) {
  return {{box.x0, box.y0}, {box.x1, box.y0}, {box.x1, box.y1}, {box.x0, box.y1}};
}

double signed_area(const Polygon& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    s += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * s;
}

double area(const Polygon& poly) { return std::abs(signed_area(poly)); }

Vec2 centroid(const Polygon& poly) {
  if (poly.empty()) return {};
  const double a = signed_area(poly);
  if (std::abs(a) < 1e-300) {
    Vec2 m;
    for (Vec2 p : poly) m = m + p;
    return m * (1.0 / static_cast<double>(poly.size()));
  }
  // Shift to the first vertex to limit cancellation.
  const Vec2 o = poly.front();
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i] - o, q = poly[(i + 1) % poly.size()] - o;
    const double c = cross(p, q);
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return Vec2{cx / (6.0 * a), cy / (6.0 * a)} + o;
}

double diameter(const Polygon& poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, distance(poly[i], poly[j]));
  }
  return d;
}

namespace {

Vec2 closest_on_segment(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

}  // namespace

Vec2 closest_boundary_point(const Polygon& poly, Vec2 p) {
  Vec2 best = poly.empty() ? p : poly.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 q = closest_on_segment(poly[i], poly[(i + 1) % poly.size()], p);
    const double d = distance(p, q);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

double boundary_distance(const Polygon& poly, Vec2 p) {
  return distance(p, closest_boundary_point(poly, p));
}

bool contains(const Polygon& poly, Vec2 p, double eps) {
  if (poly.size() < 3) return false;
  // Convex polygons only: inside every edge's left half-plane.
  const double orient = signed_area(poly) >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const double len = distance(a, b);
    if (len == 0.0) continue;
    if (orient * cross(b - a, p - a) / len < -eps) return false;
  }
  return true;
}

Polygon clip_halfplane(const Polygon& poly, Vec2 n, double c) {
  Polygon out;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % m];
    const double fa = dot(n, a) - c, fb = dot(n, b) - c;
    if (fa <= 0.0) out.push_back(a);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      const double t = fa / (fa - fb);
      out.push_back(a + (b - a) * t);
    }
  }
  return out;
}

std::vector<Polygon> voronoi_cells(std::span<const Vec2> sites, const Box& box) {
  if (sites.empty()) throw Error(ErrorCode::InvalidArgument, "voronoi needs at least one site");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      if (sites[i] == sites[j]) throw Error(ErrorCode::InvalidArgument, "degenerate sites");
    }
  }
  std::vector<Polygon> cells;
  cells.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    Polygon cell = box_polygon(box);
    for (std::size_t j = 0; j < sites.size() && !cell.empty(); ++j) {
      if (j == i) continue;
      // |p - s_i|^2 <= |p - s_j|^2  <=>  2 (s_j - s_i) . p <= |s_j|^2 - |s_i|^2
      const Vec2 n = (sites[j] - sites[i]) * 2.0;
      const double c = dot(sites[j], sites[j]) - dot(sites[i], sites[i]);
      cell = clip_halfplane(cell, n, c);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace mrgrank
