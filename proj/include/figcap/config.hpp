#pragma once

#include "figcap/eval.hpp"
#include "figcap/postprocess.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace figcap {

/// Settings shared by the batch commands.
struct RunConfig {
  std::string channels = "m12";
  int dpi_effective = 300;
  bool trace = false;
  int jobs = 1;
  PipelineConfig pipeline;
  std::vector<double> thresholds = kDefaultThresholds;
  CutoffParams cutoff;
};

/// `key = value` lines; '#' starts a comment. Throws UsageError on a line
/// without '=' or a repeated key.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Applies known keys to `cfg`. Throws UsageError on an unknown key or a bad
/// value. Keys: channels, dpi_effective, trace, jobs, last_step, nms_iou,
/// score_thresh, dedup_iou, caption_area_max_frac, grow_max_iters, keywords,
/// fuzz_max_edits, blob_threshold, thresholds, excess_cut, lost_cut,
/// coverage, cutoff_mode.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv);

/// Checks ranges (last_step in 1..10, thresholds in (0,1], ...). Throws UsageError.
void validate(const RunConfig& cfg);

/// Comma-separated numbers. Throws UsageError.
std::vector<double> parse_number_list(std::string_view s);

}  // namespace figcap
