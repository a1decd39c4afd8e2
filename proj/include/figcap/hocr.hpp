#pragma once

#include "figcap/box.hpp"

#include <json.hpp>

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace figcap {

struct Word {
  BoxD box;
  std::string text;
  double confidence = 0;  ///< percent, clamped to [0,100]
  double fontsize = 0;
  double ascenders = 0;
  double descenders = 0;
  int rotation_deg = 0;  ///< 0, 90, 180 or 270

  friend bool operator==(const Word&, const Word&) = default;
};

enum class RegionKind { paragraph, carea };

struct Region {
  BoxD box;
  RegionKind kind = RegionKind::paragraph;

  friend bool operator==(const Region&, const Region&) = default;
};

struct Page {
  std::string source_id;
  int width_px = 0;
  int height_px = 0;
  int dpi_effective = 300;
  int rotation_deg = 0;
  std::vector<Word> words;
  std::vector<Region> regions;

  BoxD bounds() const {
    return {0, 0, static_cast<double>(width_px), static_cast<double>(height_px)};
  }
  double area() const {
    return static_cast<double>(width_px) * static_cast<double>(height_px);
  }

  friend bool operator==(const Page&, const Page&) = default;
};

/// Non-fatal findings collected while parsing one document.
struct ParseDiagnostics {
  int dropped_words = 0;              ///< ocrx_word without a usable bbox
  std::vector<std::size_t> missing_metrics;  ///< word indices lacking size/asc/desc
  std::vector<std::size_t> missing_confidence;
  int clamped_confidences = 0;

  std::size_t warning_count() const {
    return static_cast<std::size_t>(dropped_words) + missing_metrics.size() +
           missing_confidence.size() + static_cast<std::size_t>(clamped_confidences);
  }
};

struct ParsedPage {
  Page page;
  ParseDiagnostics diagnostics;
};

struct HocrOptions {
  std::string source_id;
  int dpi_effective = 300;
};

/// Parses one hOCR document. Properties missing on an ocrx_word are inherited
/// from the nearest enclosing element that carries them (Tesseract puts
/// x_size/x_ascenders/x_descenders/textangle on ocr_line).
///
/// Throws MalformedDocument when the markup cannot be parsed and
/// MissingPageElement when there is no ocr_page.
ParsedPage parse_hocr(std::istream& document, const HocrOptions& opts = {});
ParsedPage parse_hocr(std::string_view document, const HocrOptions& opts = {});

/// Hull of `ann` and every word whose center lies inside it.
BoxD snap_annotation_to_words(const BoxD& ann, const Page& page);

/// Normalizes an hOCR textangle to the nearest of {0, 90, 180, 270}.
int snap_rotation(double degrees);

/// Serializes a Page to hOCR markup (used by the synthetic page generator).
/// Every word becomes its own ocr_line carrying size/ascender/descender data.
std::string to_hocr(const Page& page);

nlohmann::ordered_json page_to_json(const Page& page);
Page page_from_json(const nlohmann::json& j);

const char* to_string(RegionKind kind);

}  // namespace figcap
