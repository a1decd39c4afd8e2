#pragma once

#include "figcap/box.hpp"
#include "figcap/hocr.hpp"
#include "figcap/image.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace figcap {

struct RectCandidate {
  BoxD box;
  std::string source_filter;
  int corner_count = 4;

  double aspect() const { return box.width() / box.height(); }
  friend bool operator==(const RectCandidate&, const RectCandidate&) = default;
};

struct RectFinderParams {
  std::vector<double> quantiles{0.5, 0.7, 0.9};
  double polygon_tolerance = 0.02;  ///< fraction of contour perimeter
  double parallel_tolerance_deg = 5.0;
  double gradient_fraction = 0.25;  ///< of the maximum gradient magnitude
  int min_side_px = 8;
  double dedupe_px = 2.0;           ///< pooled candidates closer than this on every edge merge
};

struct CullParams {
  double min_area_frac = 0.005;
  double max_aspect = 8.0;
  double group_iou = 0.8;
  int restarts = 10;
  std::uint64_t seed = 0x5eed;
};

/// Fills every word box with the image's modal (background) value. Throws
/// DimensionMismatch when the image does not match the page.
GrayImage mask_words(const GrayImage& image, const Page& page);

/// Runs the filter bank (quantile thresholds, dilation, inversion, gradient
/// magnitude), traces outer contours, approximates each by a polygon and
/// keeps 4-vertex parallelograms. Contours touching the image edge are the
/// page background and are skipped.
std::vector<RectCandidate> find_rectangles(const GrayImage& masked,
                                           const RectFinderParams& params = {});

/// Drops small and colorbar-shaped boxes, then clusters the corner sets with
/// K-Means (K from greedy IOU grouping) and emits one median-corner box per
/// cluster. Idempotent.
std::vector<RectCandidate> cull_candidates(std::vector<RectCandidate> candidates,
                                           int page_width, int page_height,
                                           const CullParams& params = {});

/// mask_words, find_rectangles and cull_candidates in one call.
std::vector<RectCandidate> detect_rectangles(const GrayImage& image, const Page& page,
                                             const RectFinderParams& find = {},
                                             const CullParams& cull = {});

nlohmann::ordered_json candidates_to_json(const std::vector<RectCandidate>& cands);
std::vector<RectCandidate> candidates_from_json(const nlohmann::json& j);

}  // namespace figcap
