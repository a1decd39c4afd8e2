#include "figcap/rect_finder.hpp"

#include "figcap/contours.hpp"
#include "figcap/error.hpp"
#include "figcap/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace figcap {

namespace {

Mask darker_than(const GrayImage& img, std::uint8_t t) {
  return (img.array() < t).cast<std::uint8_t>();
}

GrayImage min_filter3(const GrayImage& img) {
  GrayImage out = img;
  const Eigen::Index h = img.rows(), w = img.cols();
  if (h < 3 || w < 3) return out;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (!dy && !dx) continue;
      auto dst = out.block(1, 1, h - 2, w - 2);
      dst = dst.cwiseMin(img.block(1 + dy, 1 + dx, h - 2, w - 2));
    }
  }
  return out;
}

Mask gradient_mask(const GrayImage& img, double fraction) {
  const Eigen::Index h = img.rows(), w = img.cols();
  Mask out = Mask::Zero(h, w);
  if (h < 3 || w < 3) return out;
  const FloatImage f = img.cast<float>();
  const Eigen::Index ih = h - 2, iw = w - 2;
  const FloatImage gx = f.block(0, 2, ih, iw) + 2 * f.block(1, 2, ih, iw) + f.block(2, 2, ih, iw) -
                        f.block(0, 0, ih, iw) - 2 * f.block(1, 0, ih, iw) - f.block(2, 0, ih, iw);
  const FloatImage gy = f.block(2, 0, ih, iw) + 2 * f.block(2, 1, ih, iw) + f.block(2, 2, ih, iw) -
                        f.block(0, 0, ih, iw) - 2 * f.block(0, 1, ih, iw) - f.block(0, 2, ih, iw);
  const FloatImage mag = (gx.array().square() + gy.array().square()).sqrt().matrix();
  const float peak = mag.maxCoeff();
  if (peak <= 0) return out;
  const float t = static_cast<float>(fraction) * peak;
  out.block(1, 1, ih, iw) = (mag.array() >= t).cast<std::uint8_t>().matrix();
  return out;
}

bool near_duplicate(const BoxD& a, const BoxD& b, double tol) {
  return std::abs(a.x0 - b.x0) <= tol && std::abs(a.y0 - b.y0) <= tol &&
         std::abs(a.x1 - b.x1) <= tol && std::abs(a.y1 - b.y1) <= tol;
}

void collect(const Mask& mask, const std::string& label, const RectFinderParams& p,
             std::vector<RectCandidate>& pool) {
  for (const Contour& c : trace_outer_contours(mask, p.min_side_px)) {
    if (c.touches_border || c.points.size() < 4) continue;
    const Polygon poly = approximate_polygon(c.points, p.polygon_tolerance * perimeter(c.points));
    if (!is_parallelogram(poly, p.parallel_tolerance_deg)) continue;
    int x0 = poly[0].x(), x1 = x0, y0 = poly[0].y(), y1 = y0;
    for (const Point& v : poly) {
      x0 = std::min(x0, v.x());
      x1 = std::max(x1, v.x());
      y0 = std::min(y0, v.y());
      y1 = std::max(y1, v.y());
    }
    const BoxD box{static_cast<double>(x0), static_cast<double>(y0),
                   static_cast<double>(x1 + 1), static_cast<double>(y1 + 1)};
    const bool dup = std::any_of(pool.begin(), pool.end(), [&](const RectCandidate& r) {
      return near_duplicate(r.box, box, p.dedupe_px);
    });
    if (!dup) pool.push_back({box, label, 4});
  }
}

auto box_key(const BoxD& b) { return std::tie(b.y0, b.x0, b.y1, b.x1); }

bool canonical_less(const RectCandidate& a, const RectCandidate& b) {
  if (box_key(a.box) != box_key(b.box)) return box_key(a.box) < box_key(b.box);
  return a.source_filter < b.source_filter;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BoxD median_box(const std::vector<RectCandidate>& cands, const std::vector<std::size_t>& members) {
  std::vector<double> x0, y0, x1, y1;
  for (std::size_t m : members) {
    x0.push_back(cands[m].box.x0);
    y0.push_back(cands[m].box.y0);
    x1.push_back(cands[m].box.x1);
    y1.push_back(cands[m].box.y1);
  }
  return {median(x0), median(y0), median(x1), median(y1)};
}

}  // namespace

GrayImage mask_words(const GrayImage& image, const Page& page) {
  if (image.cols() != page.width_px || image.rows() != page.height_px)
    throw DimensionMismatch("image does not match page dimensions");
  GrayImage out = image;
  if (page.words.empty()) return out;
  const std::uint8_t bg = modal_value(image);
  const auto w = static_cast<long>(image.cols());
  const auto h = static_cast<long>(image.rows());
  for (const Word& word : page.words) {
    const long c0 = std::clamp(static_cast<long>(std::floor(word.box.x0)), 0L, w);
    const long c1 = std::clamp(static_cast<long>(std::ceil(word.box.x1)), 0L, w);
    const long r0 = std::clamp(static_cast<long>(std::floor(word.box.y0)), 0L, h);
    const long r1 = std::clamp(static_cast<long>(std::ceil(word.box.y1)), 0L, h);
    if (c1 > c0 && r1 > r0) out.block(r0, c0, r1 - r0, c1 - c0).setConstant(bg);
  }
  return out;
}

std::vector<RectCandidate> find_rectangles(const GrayImage& masked,
                                           const RectFinderParams& params) {
  std::vector<RectCandidate> pool;
  if (masked.size() == 0) return pool;
  for (double q : params.quantiles) {
    const std::uint8_t t = quantile_value(masked, q);
    collect(darker_than(masked, t), "threshold_q" + std::to_string(std::lround(q * 100)),
            params, pool);
  }
  const std::uint8_t median_t = quantile_value(masked, 0.5);
  collect(darker_than(min_filter3(masked), median_t), "dilation", params, pool);
  collect((masked.array() >= median_t).cast<std::uint8_t>(), "inversion", params, pool);
  collect(gradient_mask(masked, params.gradient_fraction), "gradient", params, pool);
  return pool;
}

std::vector<RectCandidate> cull_candidates(std::vector<RectCandidate> candidates,
                                           int page_width, int page_height,
                                           const CullParams& params) {
  const double page_area = static_cast<double>(page_width) * page_height;
  auto passes = [&](const BoxD& b) {
    if (!b.valid()) return false;
    if (b.area() < params.min_area_frac * page_area) return false;
    const double aspect = b.width() / b.height();
    return aspect <= params.max_aspect && aspect >= 1.0 / params.max_aspect;
  };

  std::vector<RectCandidate> cands;
  for (RectCandidate& c : candidates) {
    c.box = clamp_to(c.box, static_cast<double>(page_width), static_cast<double>(page_height));
    if (passes(c.box)) cands.push_back(std::move(c));
  }
  if (cands.empty()) return cands;
  std::sort(cands.begin(), cands.end(), canonical_less);

  std::vector<std::size_t> leaders;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const bool grouped = std::any_of(leaders.begin(), leaders.end(), [&](std::size_t l) {
      return iou(cands[l].box, cands[i].box) >= params.group_iou;
    });
    if (!grouped) leaders.push_back(i);
  }
  const int k = static_cast<int>(leaders.size());

  Eigen::MatrixXd corners(static_cast<Eigen::Index>(cands.size()), 8);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const BoxD& b = cands[i].box;
    corners.row(static_cast<Eigen::Index>(i)) << b.x0, b.y0, b.x1, b.y0, b.x1, b.y1, b.x0, b.y1;
  }
  const KMeansResult km = kmeans(corners, k, params.restarts, params.seed);

  std::vector<std::vector<std::size_t>> clusters(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < cands.size(); ++i)
    clusters[static_cast<std::size_t>(km.labels[i])].push_back(i);
  std::erase_if(clusters, [](const auto& c) { return c.empty(); });

  std::vector<BoxD> reps;
  for (const auto& c : clusters) reps.push_back(median_box(cands, c));
  // Merge clusters whose representatives still coincide.
  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t a = 0; a < reps.size() && !merged; ++a) {
      for (std::size_t b = a + 1; b < reps.size() && !merged; ++b) {
        if (iou(reps[a], reps[b]) < params.group_iou) continue;
        clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
        std::sort(clusters[a].begin(), clusters[a].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(b));
        reps.erase(reps.begin() + static_cast<std::ptrdiff_t>(b));
        reps[a] = median_box(cands, clusters[a]);
        merged = true;
      }
    }
  }

  std::vector<RectCandidate> out;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (!passes(reps[i])) continue;
    const std::size_t first = *std::min_element(clusters[i].begin(), clusters[i].end());
    out.push_back({reps[i], cands[first].source_filter, 4});
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::vector<RectCandidate> detect_rectangles(const GrayImage& image, const Page& page,
                                             const RectFinderParams& find,
                                             const CullParams& cull) {
  return cull_candidates(find_rectangles(mask_words(image, page), find), page.width_px,
                         page.height_px, cull);
}

nlohmann::ordered_json candidates_to_json(const std::vector<RectCandidate>& cands) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : cands) {
    nlohmann::ordered_json j;
    j["bbox"] = {c.box.x0, c.box.y0, c.box.x1, c.box.y1};
    j["source_filter"] = c.source_filter;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<RectCandidate> candidates_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("candidates JSON must be an array");
  std::vector<RectCandidate> out;
  try {
    for (const auto& e : j) {
      const auto& b = e.at("bbox");
      if (!b.is_array() || b.size() != 4) throw SchemaError("bbox must have 4 numbers");
      RectCandidate c;
      c.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      if (!c.box.valid()) throw SchemaError("invalid candidate bbox");
      c.source_filter = e.value("source_filter", std::string("unknown"));
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("candidates JSON: ") + e.what());
  }
  return out;
}

}  // namespace figcap
