#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <type_traits>

namespace figcap {

/// Axis-aligned rectangle, origin top-left, x growing right and y growing down.
/// Half-open in pixel terms: a box (0,0,10,10) covers 100 pixels.
template <typename Scalar>
struct Box {
  Scalar x0{}, y0{}, x1{}, y1{};

  constexpr Scalar width() const { return x1 - x0; }
  constexpr Scalar height() const { return y1 - y0; }
  constexpr Scalar area() const {
    return std::max<Scalar>(0, width()) * std::max<Scalar>(0, height());
  }
  constexpr Scalar cx() const { return (x0 + x1) / Scalar(2); }
  constexpr Scalar cy() const { return (y0 + y1) / Scalar(2); }

  bool valid() const {
    if constexpr (std::is_floating_point_v<Scalar>) {
      if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) ||
          !std::isfinite(y1))
        return false;
    }
    return x0 >= 0 && y0 >= 0 && x0 < x1 && y0 < y1;
  }

  template <typename Other>
  constexpr Box<Other> cast() const {
    return {static_cast<Other>(x0), static_cast<Other>(y0),
            static_cast<Other>(x1), static_cast<Other>(y1)};
  }

  friend constexpr bool operator==(const Box&, const Box&) = default;
};

using BoxD = Box<double>;
using PixelBox = Box<std::int64_t>;

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const Box<Scalar>& b) {
  return os << '(' << b.x0 << ',' << b.y0 << ',' << b.x1 << ',' << b.y1 << ')';
}

/// Nearest-pixel rounding, ties away from zero, per coordinate.
template <typename Scalar>
PixelBox round_to_pixels(const Box<Scalar>& b) {
  if constexpr (std::is_integral_v<Scalar>) {
    return b.template cast<std::int64_t>();
  } else {
    return {std::llround(b.x0), std::llround(b.y0), std::llround(b.x1),
            std::llround(b.y1)};
  }
}

template <typename Scalar>
constexpr Box<Scalar> intersection(const Box<Scalar>& a, const Box<Scalar>& b) {
  return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
          std::min(a.y1, b.y1)};
}

/// Minimal box containing both inputs.
template <typename Scalar>
constexpr Box<Scalar> expand_to_include(const Box<Scalar>& a,
                                        const Box<Scalar>& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
          std::max(a.y1, b.y1)};
}

template <typename Scalar>
constexpr bool contains(const Box<Scalar>& outer, const Box<Scalar>& inner) {
  return outer.x0 <= inner.x0 && outer.y0 <= inner.y0 &&
         outer.x1 >= inner.x1 && outer.y1 >= inner.y1;
}

template <typename Scalar>
constexpr bool contains_point(const Box<Scalar>& b, Scalar x, Scalar y) {
  return x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1;
}

/// True when the center of `inner` lies inside `outer` (edges inclusive).
template <typename Scalar>
constexpr bool center_inside(const Box<Scalar>& outer,
                             const Box<Scalar>& inner) {
  return contains_point(outer, inner.cx(), inner.cy());
}

/// Pixel-rounded overlap counts shared by iou() and excess_lost().
struct PixelOverlap {
  std::int64_t area_a = 0;
  std::int64_t area_b = 0;
  std::int64_t inter = 0;
  std::int64_t uni() const { return area_a + area_b - inter; }
};

template <typename Scalar>
PixelOverlap pixel_overlap(const Box<Scalar>& a, const Box<Scalar>& b) {
  const PixelBox ra = round_to_pixels(a);
  const PixelBox rb = round_to_pixels(b);
  return {ra.area(), rb.area(), intersection(ra, rb).area()};
}

/// Intersection over union on nearest-pixel-rounded boxes. Zero when the
/// rounded boxes are disjoint or the union is empty.
template <typename Scalar>
double iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  const PixelOverlap o = pixel_overlap(a, b);
  const std::int64_t u = o.uni();
  if (u <= 0 || o.inter <= 0) return 0.0;
  return static_cast<double>(o.inter) / static_cast<double>(u);
}

/// IOU plus the area-in-excess and area-lost fractions of the truth box.
struct AreaPair {
  double iou = 0.0;
  double excess_frac = 0.0;
  double lost_frac = 0.0;
};

/// excess_frac = |found \ truth| / |truth|, lost_frac = |truth \ found| / |truth|.
/// A truth box that rounds to zero area yields lost_frac 1 and an infinite
/// excess_frac whenever the found box has any pixels.
template <typename Scalar>
AreaPair excess_lost(const Box<Scalar>& truth, const Box<Scalar>& found) {
  const PixelOverlap o = pixel_overlap(truth, found);
  AreaPair out;
  out.iou = iou(truth, found);
  if (o.area_a <= 0) {
    out.lost_frac = 1.0;
    out.excess_frac =
        o.area_b > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    return out;
  }
  const double t = static_cast<double>(o.area_a);
  out.excess_frac = static_cast<double>(o.area_b - o.inter) / t;
  out.lost_frac = static_cast<double>(o.area_a - o.inter) / t;
  return out;
}

/// Clamp to [0,w]x[0,h]. The result may be invalid if the box lies outside.
template <typename Scalar>
constexpr Box<Scalar> clamp_to(const Box<Scalar>& b, Scalar w, Scalar h) {
  return {std::clamp<Scalar>(b.x0, 0, w), std::clamp<Scalar>(b.y0, 0, h),
          std::clamp<Scalar>(b.x1, 0, w), std::clamp<Scalar>(b.y1, 0, h)};
}

}  // namespace figcap
