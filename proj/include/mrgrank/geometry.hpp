#pragma once

#include <span>
#include <vector>

namespace mrgrank {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

double dot(Vec2 a, Vec2 b);
double cross(Vec2 a, Vec2 b);
double norm(Vec2 a);
double distance(Vec2 a, Vec2 b);

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Vec2 p, double eps = 0.0) const;
};

/// Counter-clockwise polygon, no repeated closing vertex.
using Polygon = std::vector<Vec2>;

Polygon box_polygon(const Box& box);
double signed_area(const Polygon& poly);
double area(const Polygon& poly);
Vec2 centroid(const Polygon& poly);
double diameter(const Polygon& poly);
bool contains(const Polygon& poly, Vec2 p, double eps = 1e-12);
double boundary_distance(const Polygon& poly, Vec2 p);
/// Nearest point on the polygon boundary.
Vec2 closest_boundary_point(const Polygon& poly, Vec2 p);

/// Keeps the part of `poly` where dot(n, p) <= c.
Polygon clip_halfplane(const Polygon& poly, Vec2 n, double c);

/// Voronoi cells of `sites` clipped to `box`, one per site in order.
/// Throws "degenerate sites" if two sites coincide.
std::vector<Polygon> voronoi_cells(std::span<const Vec2> sites, const Box& box);

}  // namespace mrgrank
