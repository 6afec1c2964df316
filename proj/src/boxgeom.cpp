#include "seed/boxgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seed/error.hpp"

namespace seed {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kCollinearTol = 1e-9;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double shoelace(const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % n];
    acc += p.x * q.y - p.y * q.x;
  }
  return 0.5 * acc;
}

// Clip a convex CCW subject polygon against the half-plane left of edge a->b.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& subject, const Vec2& a,
                                  const Vec2& b) {
  std::vector<Vec2> out;
  const std::size_t n = subject.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& s = subject[i];
    const Vec2& e = subject[(i + 1) % n];
    const double ds = cross(a, b, s);
    const double de = cross(a, b, e);
    const bool s_in = ds >= 0.0;
    const bool e_in = de >= 0.0;
    if (s_in) out.push_back(s);
    if (s_in != e_in) {
      const double t = ds / (ds - de);
      out.push_back({s.x + t * (e.x - s.x), s.y + t * (e.y - s.y)});
    }
  }
  return out;
}

// Intersection area of convex CCW polygons, no input validation.
double clip_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  std::vector<Vec2> poly = a;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n && poly.size() >= 3; ++i) {
    poly = clip_half_plane(poly, b[i], b[(i + 1) % n]);
  }
  return std::max(0.0, shoelace(poly));
}

}  // namespace

double canonical_angle(double theta) {
  double a = std::remainder(theta, 2.0 * kPi);  // in [-pi, pi]
  if (a <= -kPi) a = kPi;
  return a;
}

Box3D Box3D::make(double x, double y, double z, double l, double w, double h, double theta) {
  if (!(l > 0.0) || !(w > 0.0) || !(h > 0.0)) {
    throw validation_error("Box3D: extents must be positive");
  }
  if (!std::isfinite(theta)) throw validation_error("Box3D: non-finite heading");
  return Box3D{x, y, z, l, w, h, canonical_angle(theta)};
}

void BevPolygon::validate() const {
  const std::size_t n = vertices.size();
  if (n < 3) throw validation_error("BevPolygon: needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
    if (c <= kCollinearTol) {
      throw validation_error("BevPolygon: not strictly convex counterclockwise");
    }
  }
}

double BevPolygon::area() const { return shoelace(vertices); }

BevPolygon box_corners_bev(const Box3D& box) {
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double hl = 0.5 * box.l;
  const double hw = 0.5 * box.w;
  // Local CCW order: (+,+), (-,+), (-,-), (+,-).
  const std::array<Vec2, 4> local = {Vec2{hl, hw}, Vec2{-hl, hw}, Vec2{-hl, -hw}, Vec2{hl, -hw}};
  BevPolygon poly;
  poly.vertices.reserve(4);
  for (const Vec2& p : local) {
    poly.vertices.push_back({box.x + c * p.x - s * p.y, box.y + s * p.x + c * p.y});
  }
  return poly;
}

double polygon_intersection_area(const BevPolygon& a, const BevPolygon& b) {
  a.validate();
  b.validate();
  return clip_area(a.vertices, b.vertices);
}

double bev_iou(const Box3D& a, const Box3D& b) {
  const double inter =
      clip_area(box_corners_bev(a).vertices, box_corners_bev(b).vertices);
  const double uni = a.footprint_area() + b.footprint_area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double inter_bev =
      clip_area(box_corners_bev(a).vertices, box_corners_bev(b).vertices);
  const double dz = std::min(a.z_top(), b.z_top()) - std::max(a.z_bottom(), b.z_bottom());
  const double inter = inter_bev * std::max(0.0, dz);
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double giou_bev(const Box3D& a, const Box3D& b) {
  const auto ca = box_corners_bev(a).vertices;
  const auto cb = box_corners_bev(b).vertices;
  const double inter = clip_area(ca, cb);
  const double area_a = a.footprint_area();
  const double area_b = b.footprint_area();
  const double uni = area_a + area_b - inter;
  const double iou = uni > 0.0 ? inter / uni : 0.0;

  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  for (const auto& list : {ca, cb}) {
    for (const Vec2& p : list) {
      min_x = std::min(min_x, p.x);
      min_y = std::min(min_y, p.y);
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
  }
  const double enclose = (max_x - min_x) * (max_y - min_y);
  if (enclose <= 0.0) return iou;
  return iou - (enclose - uni) / enclose;
}

std::vector<Vec2> grid_reference_points(const Box3D& box, int k) {
  if (k < 1) throw validation_error("grid_reference_points: k must be >= 1");
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(k) * k);
  for (int j = 0; j < k; ++j) {
    const double v = (-0.5 + (j + 0.5) / k) * box.w;
    for (int i = 0; i < k; ++i) {
      const double u = (-0.5 + (i + 0.5) / k) * box.l;
      pts.push_back({box.x + c * u - s * v, box.y + s * u + c * v});
    }
  }
  return pts;
}

}  // namespace seed
