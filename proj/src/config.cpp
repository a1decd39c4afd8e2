#include "figcap/config.hpp"

#include "figcap/error.hpp"
#include "figcap/features.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace figcap {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw UsageError("config " + key + ": not a number: " + v);
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw UsageError("config " + key + ": not an integer: " + v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("config " + key + ": not a boolean: " + v);
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    const std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

void check_fraction(const char* name, double v) {
  if (!(v > 0 && v <= 1)) throw UsageError(std::string(name) + " must be in (0,1]");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, trim(std::string_view(line).substr(eq + 1))).second)
      throw UsageError("config key repeated: " + key);
  }
  return out;
}

std::vector<double> parse_number_list(std::string_view s) {
  std::vector<double> out;
  const std::vector<std::string> items = split_commas(s);
  if (items.size() != static_cast<std::size_t>(std::count(s.begin(), s.end(), ',')) + 1)
    throw UsageError("empty item in number list: " + std::string(s));
  for (const std::string& item : items) out.push_back(to_double("list", item));
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  PipelineConfig& p = cfg.pipeline;
  for (const auto& [k, v] : kv) {
    if (k == "channels") cfg.channels = v;
    else if (k == "dpi_effective") cfg.dpi_effective = to_int(k, v);
    else if (k == "trace") cfg.trace = to_bool(k, v);
    else if (k == "jobs") cfg.jobs = to_int(k, v);
    else if (k == "last_step") p.last_step = to_int(k, v);
    else if (k == "nms_iou") p.nms_iou = to_double(k, v);
    else if (k == "score_thresh") p.score_thresh = to_double(k, v);
    else if (k == "dedup_iou") p.dedup_iou = to_double(k, v);
    else if (k == "caption_area_max_frac") p.caption_area_max_frac = to_double(k, v);
    else if (k == "grow_max_iters") p.grow_max_iters = to_int(k, v);
    else if (k == "keywords") p.keywords = split_commas(v);
    else if (k == "fuzz_max_edits") p.fuzz_max_edits = to_int(k, v);
    else if (k == "blob_threshold") p.blob_threshold = to_double(k, v);
    else if (k == "thresholds") cfg.thresholds = parse_number_list(v);
    else if (k == "excess_cut") cfg.cutoff.excess_cut = to_double(k, v);
    else if (k == "lost_cut") cfg.cutoff.lost_cut = to_double(k, v);
    else if (k == "coverage") cfg.cutoff.coverage = to_double(k, v);
    else if (k == "cutoff_mode") {
      if (v == "percentile") cfg.cutoff.mode = CutoffMode::percentile;
      else if (v == "threshold") cfg.cutoff.mode = CutoffMode::threshold;
      else throw UsageError("cutoff_mode must be percentile or threshold");
    } else {
      throw UsageError("unknown config key: " + k);
    }
  }
}

void validate(const RunConfig& cfg) {
  const PipelineConfig& p = cfg.pipeline;
  if (p.last_step < 1 || p.last_step > 10) throw UsageError("last_step must be in 1..10");
  check_fraction("nms_iou", p.nms_iou);
  check_fraction("dedup_iou", p.dedup_iou);
  check_fraction("caption_area_max_frac", p.caption_area_max_frac);
  check_fraction("blob_threshold", p.blob_threshold);
  if (p.score_thresh < 0 || p.score_thresh > 1) throw UsageError("score_thresh must be in [0,1]");
  if (p.grow_max_iters < 0) throw UsageError("grow_max_iters must be >= 0");
  if (p.fuzz_max_edits < 0) throw UsageError("fuzz_max_edits must be >= 0");
  if (p.keywords.empty()) throw UsageError("keywords must not be empty");
  for (double t : cfg.thresholds) check_fraction("thresholds", t);
  check_fraction("excess_cut", cfg.cutoff.excess_cut);
  check_fraction("lost_cut", cfg.cutoff.lost_cut);
  check_fraction("coverage", cfg.cutoff.coverage);
  if (cfg.dpi_effective <= 0) throw UsageError("dpi_effective must be positive");
  if (cfg.jobs < 1) throw UsageError("jobs must be >= 1");
  parse_channel_set(cfg.channels);
}

}  // namespace figcap
