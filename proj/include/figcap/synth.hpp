#pragma once

#include "figcap/eval.hpp"
#include "figcap/hocr.hpp"
#include "figcap/image.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace figcap {

struct SynthParams {
  int width = 1000;
  int height = 1300;
  int margin = 60;
  int word_height = 14;
  int frame_thickness = 2;
  int min_figures = 1;
  int max_figures = 2;
};

/// A rendered page with known figure and caption geometry.
struct SynthPage {
  Page page;
  GrayImage image;
  std::vector<GroundTruth> truths;  ///< figure boxes follow the caption codebook
  std::vector<BoxD> frames;         ///< drawn frame of each figure
  std::vector<BoxD> captions;       ///< hull of each caption's words
};

/// Single-column page: paragraphs of filler text, 1-2 framed line plots with
/// in-frame axis labels, and "Figure N." captions 1.5 word heights below each
/// frame. Figure truth is the frame stretched down to the caption top and out
/// to the caption's left and right edges. Deterministic in `seed`.
SynthPage synth_page(std::uint64_t seed, const SynthParams& params = {});

/// Filler vocabulary. No entry is within one edit of a caption keyword.
const std::vector<std::string>& filler_words();

struct SynthArticle {
  std::string article_id;
  nlohmann::ordered_json miner_json;  ///< figure-list JSON as a PDF miner writes it
  std::optional<int> year;
  bool figures_parsable = false;
  bool tables_parsable = false;
};

/// `count` articles of which exactly `figure_parsable` have figure labels
/// forming 1..N and exactly `table_parsable` have table labels forming 1..N.
/// The rest are broken in varied ways (gaps, duplicates, "4a"-style labels,
/// mixed numbering, no objects).
std::vector<SynthArticle> synth_parsability_corpus(int count, int figure_parsable,
                                                   int table_parsable, std::uint64_t seed);

}  // namespace figcap
