#pragma once

#include "figcap/box.hpp"
#include "figcap/hocr.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace figcap {

enum class DetClass { figure, figure_caption, table, math_formula };
enum class Origin { model, heuristic, mined };

struct Detection {
  BoxD box;
  DetClass cls = DetClass::figure;
  double score = 1.0;
  Origin origin = Origin::model;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct PairedResult {
  Detection figure;
  std::optional<Detection> caption;
  std::string page_id;

  friend bool operator==(const PairedResult&, const PairedResult&) = default;
};

struct PipelineConfig {
  int last_step = 10;
  double nms_iou = 0.5;
  double score_thresh = 0.25;
  double dedup_iou = 0.25;
  double caption_area_max_frac = 0.75;
  int grow_max_iters = 5;
  std::vector<std::string> keywords{"Fig.", "Figure", "Plate"};
  int fuzz_max_edits = 1;
  double blob_threshold = 0.25;  ///< blurred word-mask level that counts as inside
};

const char* to_string(DetClass c);
const char* to_string(Origin o);
std::optional<DetClass> det_class_from_string(std::string_view s);

/// Deterministic order: class, score descending, area descending, top, left.
void canonical_sort(std::vector<Detection>& dets);

/// Step 1: drops boxes scoring below `score_thresh`, then greedy class-wise
/// non-maximum suppression at `iou_thresh`.
std::vector<Detection> step1_nms(std::vector<Detection> raw, double iou_thresh = 0.5,
                                 double score_thresh = 0.25);

/// Step 2: across classes, of any pair overlapping at IOU >= `iou_thresh` the
/// lower-scored box goes. Equal scores keep the larger, then upper-left, box.
std::vector<Detection> step2_cross_dedupe(std::vector<Detection> dets, double iou_thresh = 0.25);

/// Step 3: a model caption overlapping a mined caption takes the mined
/// geometry (best IOU wins). Mined captions without overlap are not added.
std::vector<Detection> step3_adopt_mined_captions(std::vector<Detection> dets,
                                                  std::span<const BoxD> mined_captions);

/// Word-mask blob analysis behind step 4: returns the word hull of every blob
/// containing a caption keyword.
std::vector<BoxD> find_heuristic_captions(const Page& page, const PipelineConfig& cfg = {});

/// True when `word` is within `max_edits` of a keyword, ignoring case, dots
/// and trailing digits.
bool fuzzy_keyword_match(std::string_view word, std::span<const std::string> keywords,
                         int max_edits);

/// Step 4: heuristic captions merge into overlapping captions (heuristic top,
/// outermost left/right/bottom) or are added as new captions.
std::vector<Detection> step4_heuristic_captions(std::vector<Detection> dets, const Page& page,
                                                const PipelineConfig& cfg = {});

/// Step 5: captions grow to include word and paragraph boxes whose centers
/// they contain, until nothing changes or `max_iters` passes.
std::vector<Detection> step5_grow_captions(std::vector<Detection> dets, const Page& page,
                                           int max_iters = 5);

/// Step 6: figures overlapping a rectangle become the hull of both.
std::vector<Detection> step6_merge_rects(std::vector<Detection> dets,
                                         std::span<const BoxD> rects);

/// Step 7: captions larger than `max_frac` of the page are dropped.
std::vector<Detection> step7_drop_large_captions(std::vector<Detection> dets, const Page& page,
                                                 double max_frac = 0.75);

/// Midpoint of the figure's "bottom" edge for a page rotation.
std::pair<double, double> bottom_midpoint(const BoxD& figure, int rotation_deg);

/// Step 8: greedy one-to-one pairing by ascending distance from caption
/// center to figure bottom. Unpaired captions are dropped; unpaired figures
/// are kept without a caption.
std::vector<PairedResult> step8_pair(const std::vector<Detection>& dets, const Page& page);

/// Step 9: figure bottom moves down to the caption top when the caption lies
/// beyond it. Never shrinks.
std::vector<PairedResult> step9_extend_to_caption_top(std::vector<PairedResult> pairs,
                                                      int rotation_deg = 0);

/// Step 10: figure widens to the caption's horizontal extent.
std::vector<PairedResult> step10_extend_horizontal(std::vector<PairedResult> pairs,
                                                   int rotation_deg = 0);

struct StepSnapshot {
  int step = 0;
  std::vector<Detection> detections;
  std::vector<PairedResult> pairs;
};

struct PipelineResult {
  int last_step = 10;
  std::vector<Detection> detections;  ///< output of the last detection-level step
  std::vector<PairedResult> pairs;    ///< empty when last_step < 8
  std::vector<StepSnapshot> snapshots;

  /// Flattened figure and caption detections of the final state.
  std::vector<Detection> final_detections() const;
};

/// Applies steps 1..cfg.last_step. Inputs are canonically sorted first, so
/// the result does not depend on input order.
PipelineResult run_pipeline(std::vector<Detection> raw, const Page& page,
                            std::span<const BoxD> mined_captions, std::span<const BoxD> rects,
                            const PipelineConfig& cfg = {});

/// Rectangles as figure detections (score 1, heuristic origin), the input of
/// the detector-free pipeline.
std::vector<Detection> rects_as_figures(std::span<const BoxD> rects);

std::vector<Detection> detections_from_json(const nlohmann::json& j);
nlohmann::ordered_json detections_to_json(std::span<const Detection> dets);
/// [{figure:{bbox,score}|null, caption:{bbox,score}|null}]. Before step 8
/// figures and captions are listed unpaired.
nlohmann::ordered_json results_to_json(const PipelineResult& r);
/// Reads results JSON back into figure and caption detections.
std::vector<Detection> results_from_json(const nlohmann::json& j);
nlohmann::ordered_json snapshots_to_json(const PipelineResult& r);

}  // namespace figcap
