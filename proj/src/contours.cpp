#include "figcap/contours.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace figcap {

namespace {

// Clockwise (in image coordinates) starting at West.
constexpr std::array<std::array<int, 2>, 8> kDirs = {{
    {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int dir_index(int dx, int dy) {
  for (int i = 0; i < 8; ++i)
    if (kDirs[i][0] == dx && kDirs[i][1] == dy) return i;
  return 0;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Eigen::Vector2d pa = (p - a).cast<double>();
  const Eigen::Vector2d ba = (b - a).cast<double>();
  const double len2 = ba.squaredNorm();
  if (len2 == 0) return pa.norm();
  const double t = std::clamp(pa.dot(ba) / len2, 0.0, 1.0);
  return (pa - t * ba).norm();
}

// Douglas-Peucker over pts[first..last] inclusive; marks kept indices.
void dp_mark(const Polygon& pts, std::size_t first, std::size_t last, double eps,
             std::vector<char>& keep) {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    if (b <= a + 1) continue;
    double best = -1;
    std::size_t idx = a;
    for (std::size_t k = a + 1; k < b; ++k) {
      const double d = point_segment_distance(pts[k], pts[a], pts[b % pts.size()]);
      if (d > best) {
        best = d;
        idx = k;
      }
    }
    if (best > eps) {
      keep[idx] = 1;
      stack.emplace_back(a, idx);
      stack.emplace_back(idx, b);
    }
  }
}

}  // namespace

Image<std::int32_t> label_components(const Mask& mask, int* count) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  Image<std::int32_t> labels = Image<std::int32_t>::Zero(h, w);
  std::int32_t next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x) || labels(y, x)) continue;
      ++next;
      labels(y, x) = next;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (const auto& d : kDirs) {
          const int nx = cx + d[0], ny = cy + d[1];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (!mask(ny, nx) || labels(ny, nx)) continue;
          labels(ny, nx) = next;
          stack.emplace_back(nx, ny);
        }
      }
    }
  }
  if (count) *count = next;
  return labels;
}

std::vector<Contour> trace_outer_contours(const Mask& mask, int min_side) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  int n = 0;
  const Image<std::int32_t> labels = label_components(mask, &n);

  std::vector<Contour> comps(static_cast<std::size_t>(n));
  std::vector<Point> start(static_cast<std::size_t>(n), Point(-1, -1));
  for (auto& c : comps)
    c.bounds = {std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max(), -1, -1};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t l = labels(y, x);
      if (!l) continue;
      auto& c = comps[static_cast<std::size_t>(l - 1)];
      if (start[static_cast<std::size_t>(l - 1)].x() < 0) start[static_cast<std::size_t>(l - 1)] = Point(x, y);
      c.bounds.x0 = std::min<std::int64_t>(c.bounds.x0, x);
      c.bounds.y0 = std::min<std::int64_t>(c.bounds.y0, y);
      c.bounds.x1 = std::max<std::int64_t>(c.bounds.x1, x + 1);
      c.bounds.y1 = std::max<std::int64_t>(c.bounds.y1, y + 1);
      ++c.pixel_count;
    }
  }

  auto fg = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && mask(y, x) != 0;
  };

  std::vector<Contour> out;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    Contour& c = comps[i];
    if (c.bounds.width() < min_side || c.bounds.height() < min_side) continue;
    c.touches_border = c.bounds.x0 == 0 || c.bounds.y0 == 0 || c.bounds.x1 == w ||
                       c.bounds.y1 == h;
    const Point s = start[i];
    c.points.push_back(s);
    // Moore-neighbour tracing; the pixel west of the start is background.
    Point p = s;
    int back = 0;
    int first_dir = -1;
    const std::size_t guard = 4 * static_cast<std::size_t>(c.pixel_count) + 8;
    for (std::size_t steps = 0; steps < guard; ++steps) {
      int found = -1;
      for (int k = 1; k <= 8; ++k) {
        const int d = (back + k) % 8;
        if (fg(p.x() + kDirs[d][0], p.y() + kDirs[d][1])) {
          found = d;
          break;
        }
      }
      if (found < 0) break;  // isolated pixel
      if (p == s && steps > 0 && found == first_dir) break;
      if (first_dir < 0) first_dir = found;
      const int prev = (found + 7) % 8;
      const Point q(p.x() + kDirs[found][0], p.y() + kDirs[found][1]);
      const Point b(p.x() + kDirs[prev][0], p.y() + kDirs[prev][1]);
      back = dir_index(b.x() - q.x(), b.y() - q.y());
      p = q;
      if (p == s) continue;
      c.points.push_back(p);
    }
    out.push_back(std::move(c));
  }
  return out;
}

double perimeter(const Polygon& closed) {
  double total = 0;
  for (std::size_t i = 0; i < closed.size(); ++i)
    total += (closed[(i + 1) % closed.size()] - closed[i]).cast<double>().norm();
  return total;
}

Polygon approximate_polygon(const Polygon& contour, double epsilon) {
  const std::size_t n = contour.size();
  if (n < 3) return contour;
  std::size_t far = 0;
  double best = -1;
  for (std::size_t k = 1; k < n; ++k) {
    const double d = (contour[k] - contour[0]).cast<double>().squaredNorm();
    if (d > best) {
      best = d;
      far = k;
    }
  }
  std::vector<char> keep(n, 0);
  keep[0] = 1;
  keep[far] = 1;
  dp_mark(contour, 0, far, epsilon, keep);
  dp_mark(contour, far, n, epsilon, keep);  // index n wraps to 0
  Polygon poly;
  for (std::size_t k = 0; k < n; ++k)
    if (keep[k]) poly.push_back(contour[k]);

  // The split points are forced vertices; drop any that sit on a straight run.
  bool changed = true;
  while (changed && poly.size() > 3) {
    changed = false;
    double min_dev = epsilon;
    std::size_t idx = poly.size();
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Point& prev = poly[(k + poly.size() - 1) % poly.size()];
      const Point& next = poly[(k + 1) % poly.size()];
      const double d = point_segment_distance(poly[k], prev, next);
      if (d < min_dev) {
        min_dev = d;
        idx = k;
      }
    }
    if (idx < poly.size()) {
      poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(idx));
      changed = true;
    }
  }
  return poly;
}

bool is_parallelogram(const Polygon& quad, double max_angle_deg) {
  if (quad.size() != 4) return false;
  std::array<Eigen::Vector2d, 4> e;
  for (std::size_t i = 0; i < 4; ++i) {
    e[i] = (quad[(i + 1) % 4] - quad[i]).cast<double>();
    if (e[i].norm() < 1.0) return false;
  }
  int sign = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Eigen::Vector2d& a = e[i];
    const Eigen::Vector2d& b = e[(i + 1) % 4];
    const double cross = a.x() * b.y() - a.y() * b.x();
    if (cross == 0) return false;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  const double cos_max = std::cos(max_angle_deg * std::numbers::pi / 180.0);
  auto parallel = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::abs(a.dot(b)) / (a.norm() * b.norm()) >= cos_max;
  };
  return parallel(e[0], e[2]) && parallel(e[1], e[3]);
}

}  // namespace figcap
