#pragma once

#include "figcap/box.hpp"
#include "figcap/image.hpp"

#include <Eigen/Core>

#include <vector>

namespace figcap {

/// 0/1 raster.
using Mask = Image<std::uint8_t>;

using Point = Eigen::Vector2i;  // (x, y)
using Polygon = std::vector<Point>;

struct Contour {
  Polygon points;        ///< outer boundary, clockwise, first point top-left-most
  PixelBox bounds;       ///< pixel bounds, half-open
  bool touches_border = false;
  std::int64_t pixel_count = 0;
};

/// Traces the outer border of every 8-connected foreground component with
/// Moore-neighbour border following. Components nested inside holes of other
/// components are traced too. Components whose bounds are smaller than
/// `min_side` in either direction are skipped.
std::vector<Contour> trace_outer_contours(const Mask& mask, int min_side = 1);

/// 8-connected component labels (0 = background, 1.. = component id).
Image<std::int32_t> label_components(const Mask& mask, int* count = nullptr);

/// Closed-curve Douglas-Peucker approximation with tolerance `epsilon`.
Polygon approximate_polygon(const Polygon& contour, double epsilon);

double perimeter(const Polygon& closed);

/// True for a convex 4-gon whose opposite sides are parallel within
/// `max_angle_deg`.
bool is_parallelogram(const Polygon& quad, double max_angle_deg);

}  // namespace figcap
