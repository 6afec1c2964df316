#pragma once

#include <array>
#include <vector>

namespace seed {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Heading canonicalized to (-pi, pi].
double canonical_angle(double theta);

// Upright oriented 3D box: center (x, y, z), extents (l, w, h) along the local
// axes, heading theta counterclockwise from +x. Sizes must be positive.
struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double theta = 0.0;

  static Box3D make(double x, double y, double z, double l, double w, double h, double theta);

  double volume() const { return l * w * h; }
  double footprint_area() const { return l * w; }
  double z_bottom() const { return z - 0.5 * h; }
  double z_top() const { return z + 0.5 * h; }
};

// Convex counterclockwise polygon in BEV world coordinates.
struct BevPolygon {
  std::vector<Vec2> vertices;

  // Throws validation_error unless >= 3 vertices, counterclockwise, and
  // strictly convex up to the 1e-9 collinearity tolerance.
  void validate() const;
  double area() const;
};

// Footprint corners at center + R(theta) * (+-l/2, +-w/2), counterclockwise.
BevPolygon box_corners_bev(const Box3D& box);

// Area of the intersection of two convex CCW polygons (Sutherland-Hodgman
// clipping, then shoelace). Validates both inputs.
double polygon_intersection_area(const BevPolygon& a, const BevPolygon& b);

double bev_iou(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);

// GIoU over rotated BEV footprints with the axis-aligned bounding rectangle of
// both footprints as the enclosing region. In (-1, 1].
double giou_bev(const Box3D& a, const Box3D& b);

// Centers of the k x k uniform subdivision of the footprint, row-major with
// the l-axis index fastest. k >= 1.
std::vector<Vec2> grid_reference_points(const Box3D& box, int k);

}  // namespace seed
