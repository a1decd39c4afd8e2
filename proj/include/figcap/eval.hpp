#pragma once

#include "figcap/box.hpp"
#include "figcap/postprocess.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace figcap {

struct GroundTruth {
  BoxD box;
  DetClass cls = DetClass::figure;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

enum class Outcome { TP, FP, FN };

struct MatchRecord {
  std::optional<GroundTruth> truth;
  std::optional<Detection> found;
  double iou = 0;
  Outcome outcome = Outcome::FN;
};

/// Greedy one-to-one matching by descending IOU over pairs with IOU >= thresh.
/// Ties go to the lower truth index, then the lower found index. Unmatched
/// founds are FP and unmatched truths FN. Classes are not checked.
std::vector<MatchRecord> match(std::span<const GroundTruth> truths,
                               std::span<const Detection> founds, double iou_thresh);

struct Counts {
  int tp = 0;
  int fp = 0;
  int fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

Counts count(std::span<const MatchRecord> records);

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool empty = false;  ///< TP = FP = FN = 0, reported as (1,1,1)
};

Prf prf(const Counts& c);

/// Everything from one page that evaluation needs.
struct PageEval {
  std::string page_id;
  std::vector<GroundTruth> truths;
  std::vector<Detection> founds;
  std::optional<int> year;
};

/// COCO-style AP for one class: mean over IOU 0.50:0.05:0.95 of the
/// 101-point interpolated precision. Detections are ranked by score across
/// pages and each takes the best unmatched truth on its page. Returns nullopt
/// when the class has no truths.
std::optional<double> coco_ap(std::span<const PageEval> pages, DetClass cls);

/// Single-threshold AP with the same ranking, for tests and diagnostics.
std::optional<double> average_precision(std::span<const PageEval> pages, DetClass cls,
                                        double iou_thresh);

struct PairMeasure {
  double iou = 0;
  double excess_frac = 0;
  double lost_frac = 0;
  bool compliant = false;
};

enum class CutoffMode {
  percentile,  ///< lowest IOU still above 90% of the compliant pairs
  threshold,   ///< lowest IOU above which 90% of all pairs are compliant
};

struct CutoffParams {
  double excess_cut = 0.10;
  double lost_cut = 0.05;
  double coverage = 0.90;
  CutoffMode mode = CutoffMode::percentile;
};

struct CutoffAnalysis {
  std::vector<PairMeasure> pairs;
  double cutoff = 0;
  std::size_t compliant = 0;
};

/// `pairs` holds matched (truth, found) boxes only. Throws NoCompliantPairs
/// when no pair satisfies both cuts.
CutoffAnalysis excess_lost_analysis(std::span<const std::pair<BoxD, BoxD>> pairs,
                                    const CutoffParams& params = {});

/// iou,excess_frac,lost_frac,compliant rows for plotting.
std::string cutoff_csv(const CutoffAnalysis& a);

/// Truth/found pairs matched at `iou_thresh` (default: any overlap) per
/// class, for the cutoff analysis.
std::vector<std::pair<BoxD, BoxD>> matched_pairs(std::span<const PageEval> pages,
                                                 std::optional<DetClass> cls,
                                                 double iou_thresh = 1e-9);

struct ThresholdRow {
  DetClass cls = DetClass::figure;
  double iou = 0;
  Counts counts;
  Prf metrics;
};

struct DecadeF1 {
  std::string bin;  ///< "1960" or "unknown"
  DetClass cls = DetClass::figure;
  double iou = 0;
  Counts counts;
  Prf metrics;
};

struct ClassAp {
  DetClass cls = DetClass::figure;
  std::optional<double> ap;
};

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<ThresholdRow> rows;
  std::vector<ClassAp> coco_ap;
  std::vector<DecadeF1> decades;  ///< empty when no page has a year
};

inline const std::vector<double> kDefaultThresholds{0.1, 0.6, 0.8, 0.9};

/// Aggregates per class (those present in truths or founds, in enum order)
/// and threshold, and per decade when any page carries a year.
EvalReport report(std::span<const PageEval> pages,
                  std::span<const double> thresholds = kDefaultThresholds);

nlohmann::ordered_json report_to_json(const EvalReport& r);
/// One row per class and metric (TP, FP, FN, Prec, Rec, F1), one column per
/// IOU threshold. Counts are raw, metrics are fractions.
std::string report_csv(const EvalReport& r);
std::string decade_csv(const EvalReport& r);

/// "class cx cy w h" lines in page fractions. Class ids follow DetClass
/// order: 0 figure, 1 figure_caption, 2 table, 3 math_formula. Throws
/// SchemaError.
std::vector<GroundTruth> read_normalized_truth(std::string_view text, int page_width,
                                               int page_height);
std::string write_normalized_truth(std::span<const GroundTruth> truths, int page_width,
                                   int page_height);

/// [{bbox:[x0,y0,x1,y1], class}] in page pixels. Throws SchemaError.
std::vector<GroundTruth> truths_from_json(const nlohmann::json& j);
nlohmann::ordered_json truths_to_json(std::span<const GroundTruth> truths);

const char* to_string(Outcome o);

}  // namespace figcap
