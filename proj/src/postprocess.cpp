#include "figcap/postprocess.hpp"

#include "figcap/contours.hpp"
#include "figcap/error.hpp"
#include "figcap/image.hpp"
#include "figcap/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace figcap {

namespace {

bool is_caption(const Detection& d) { return d.cls == DetClass::figure_caption; }
bool is_figure(const Detection& d) { return d.cls == DetClass::figure; }

// Higher priority first: score, then area, then upper-left.
bool priority_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  const double aa = a.box.area(), ba = b.box.area();
  if (aa != ba) return aa > ba;
  return std::tie(a.box.y0, a.box.x0, a.box.y1, a.box.x1) <
         std::tie(b.box.y0, b.box.x0, b.box.y1, b.box.x1);
}

bool overlaps(const BoxD& a, const BoxD& b) { return iou(a, b) > 0; }

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = static_cast<float>(v);
    sum += v;
  }
  for (float& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Separable Gaussian with zero padding.
FloatImage gaussian_blur(const FloatImage& src, double sigma) {
  const std::vector<float> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  FloatImage tmp = FloatImage::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0;
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < w) acc += k[static_cast<std::size_t>(i + r)] * src(y, xx);
      }
      tmp(y, x) = acc;
    }
  FloatImage out = FloatImage::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0;
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < h) acc += k[static_cast<std::size_t>(i + r)] * tmp(yy, x);
      }
      out(y, x) = acc;
    }
  return out;
}

std::vector<Detection> flatten(const std::vector<PairedResult>& pairs) {
  std::vector<Detection> out;
  for (const auto& p : pairs) {
    out.push_back(p.figure);
    if (p.caption) out.push_back(*p.caption);
  }
  return out;
}

}  // namespace

const char* to_string(DetClass c) {
  switch (c) {
    case DetClass::figure: return "figure";
    case DetClass::figure_caption: return "figure_caption";
    case DetClass::table: return "table";
    default: return "math_formula";
  }
}

const char* to_string(Origin o) {
  switch (o) {
    case Origin::model: return "model";
    case Origin::heuristic: return "heuristic";
    default: return "mined";
  }
}

std::optional<DetClass> det_class_from_string(std::string_view s) {
  if (s == "figure") return DetClass::figure;
  if (s == "figure_caption" || s == "caption") return DetClass::figure_caption;
  if (s == "table") return DetClass::table;
  if (s == "math_formula" || s == "math") return DetClass::math_formula;
  return std::nullopt;
}

void canonical_sort(std::vector<Detection>& dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.cls != b.cls) return a.cls < b.cls;
    if (priority_before(a, b)) return true;
    if (priority_before(b, a)) return false;
    return a.origin < b.origin;
  });
}

std::vector<Detection> step1_nms(std::vector<Detection> raw, double iou_thresh,
                                 double score_thresh) {
  std::erase_if(raw, [&](const Detection& d) { return d.score < score_thresh; });
  std::stable_sort(raw.begin(), raw.end(), priority_before);
  std::vector<Detection> kept;
  for (const Detection& d : raw) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.cls == d.cls && iou(k.box, d.box) >= iou_thresh;
    });
    if (!suppressed) kept.push_back(d);
  }
  canonical_sort(kept);
  return kept;
}

std::vector<Detection> step2_cross_dedupe(std::vector<Detection> dets, double iou_thresh) {
  std::stable_sort(dets.begin(), dets.end(), priority_before);
  std::vector<Detection> kept;
  for (const Detection& d : dets) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.box, d.box) >= iou_thresh;
    });
    if (!dup) kept.push_back(d);
  }
  canonical_sort(kept);
  return kept;
}

std::vector<Detection> step3_adopt_mined_captions(std::vector<Detection> dets,
                                                  std::span<const BoxD> mined_captions) {
  for (Detection& d : dets) {
    if (!is_caption(d) || d.origin != Origin::model) continue;
    double best = 0;
    const BoxD* pick = nullptr;
    for (const BoxD& m : mined_captions) {
      const double v = iou(d.box, m);
      if (v > best) {
        best = v;
        pick = &m;
      }
    }
    if (pick) {
      d.box = *pick;
      d.origin = Origin::mined;
    }
  }
  canonical_sort(dets);
  return dets;
}

bool fuzzy_keyword_match(std::string_view word, std::span<const std::string> keywords,
                         int max_edits) {
  const std::u32string key = text::keyword_key(word);
  if (key.empty()) return false;
  for (const std::string& kw : keywords) {
    const std::u32string k = text::keyword_key(kw);
    if (text::edit_distance(key, k) <= static_cast<std::size_t>(max_edits)) return true;
  }
  return false;
}

std::vector<BoxD> find_heuristic_captions(const Page& page, const PipelineConfig& cfg) {
  std::vector<BoxD> out;
  if (page.words.empty()) return out;
  std::vector<double> heights;
  heights.reserve(page.words.size());
  for (const Word& w : page.words) heights.push_back(w.box.height());
  const double sigma = std::max(1.0, median(heights));

  // Work on a coarse grid; the mask is blurred by about a word height anyway.
  const int cell = std::max(1, static_cast<int>(std::floor(sigma / 4)));
  const int gw = (page.width_px + cell - 1) / cell;
  const int gh = (page.height_px + cell - 1) / cell;
  FloatImage cover = FloatImage::Zero(gh, gw);
  const double cell_area = static_cast<double>(cell) * cell;
  for (const Word& w : page.words) {
    const int cx0 = static_cast<int>(std::floor(w.box.x0 / cell));
    const int cx1 = std::min(gw - 1, static_cast<int>(std::floor(w.box.x1 / cell)));
    const int cy0 = static_cast<int>(std::floor(w.box.y0 / cell));
    const int cy1 = std::min(gh - 1, static_cast<int>(std::floor(w.box.y1 / cell)));
    for (int cy = cy0; cy <= cy1; ++cy)
      for (int cx = cx0; cx <= cx1; ++cx) {
        const BoxD c{static_cast<double>(cx * cell), static_cast<double>(cy * cell),
                     static_cast<double>((cx + 1) * cell), static_cast<double>((cy + 1) * cell)};
        const double a = intersection(c, w.box).area() / cell_area;
        cover(cy, cx) = std::min(1.0f, cover(cy, cx) + static_cast<float>(a));
      }
  }
  const FloatImage blurred = gaussian_blur(cover, sigma / cell);
  const Mask blobs = (blurred.array() >= static_cast<float>(cfg.blob_threshold)).cast<std::uint8_t>();
  int n = 0;
  const Image<std::int32_t> labels = label_components(blobs, &n);

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n) + 1);
  std::vector<char> has_keyword(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t i = 0; i < page.words.size(); ++i) {
    const Word& w = page.words[i];
    const int cx = std::clamp(static_cast<int>(w.box.cx() / cell), 0, gw - 1);
    const int cy = std::clamp(static_cast<int>(w.box.cy() / cell), 0, gh - 1);
    const auto l = static_cast<std::size_t>(labels(cy, cx));
    if (l == 0) continue;
    members[l].push_back(i);
    if (fuzzy_keyword_match(w.text, cfg.keywords, cfg.fuzz_max_edits)) has_keyword[l] = 1;
  }
  for (std::size_t l = 1; l < members.size(); ++l) {
    if (!has_keyword[l] || members[l].empty()) continue;
    BoxD hull = page.words[members[l].front()].box;
    for (std::size_t i : members[l]) hull = expand_to_include(hull, page.words[i].box);
    out.push_back(hull);
  }
  std::sort(out.begin(), out.end(), [](const BoxD& a, const BoxD& b) {
    return std::tie(a.y0, a.x0, a.y1, a.x1) < std::tie(b.y0, b.x0, b.y1, b.x1);
  });
  return out;
}

std::vector<Detection> step4_heuristic_captions(std::vector<Detection> dets, const Page& page,
                                                const PipelineConfig& cfg) {
  for (const BoxD& h : find_heuristic_captions(page, cfg)) {
    bool merged = false;
    for (Detection& d : dets) {
      if (!is_caption(d) || !overlaps(d.box, h)) continue;
      d.box = {std::min(d.box.x0, h.x0), h.y0, std::max(d.box.x1, h.x1),
               std::max(d.box.y1, h.y1)};
      merged = true;
    }
    if (!merged) dets.push_back({h, DetClass::figure_caption, 1.0, Origin::heuristic});
  }
  canonical_sort(dets);
  return dets;
}

std::vector<Detection> step5_grow_captions(std::vector<Detection> dets, const Page& page,
                                           int max_iters) {
  std::vector<BoxD> boxes;
  for (const Word& w : page.words) boxes.push_back(w.box);
  for (const Region& r : page.regions)
    if (r.kind == RegionKind::paragraph) boxes.push_back(r.box);
  for (Detection& d : dets) {
    if (!is_caption(d)) continue;
    for (int iter = 0; iter < max_iters; ++iter) {
      bool changed = false;
      for (const BoxD& b : boxes) {
        if (center_inside(d.box, b) && !contains(d.box, b)) {
          d.box = expand_to_include(d.box, b);
          changed = true;
        }
      }
      if (!changed) break;
    }
  }
  canonical_sort(dets);
  return dets;
}

std::vector<Detection> step6_merge_rects(std::vector<Detection> dets, std::span<const BoxD> rects) {
  for (Detection& d : dets) {
    if (!is_figure(d)) continue;
    for (bool changed = true; changed;) {
      changed = false;
      for (const BoxD& r : rects) {
        if (overlaps(d.box, r) && !contains(d.box, r)) {
          d.box = expand_to_include(d.box, r);
          changed = true;
        }
      }
    }
  }
  canonical_sort(dets);
  return dets;
}

std::vector<Detection> step7_drop_large_captions(std::vector<Detection> dets, const Page& page,
                                                 double max_frac) {
  const double limit = max_frac * page.area();
  std::erase_if(dets, [&](const Detection& d) { return is_caption(d) && d.box.area() > limit; });
  return dets;
}

std::pair<double, double> bottom_midpoint(const BoxD& f, int rotation_deg) {
  switch (snap_rotation(rotation_deg)) {
    case 90: return {f.x1, f.cy()};
    case 180: return {f.cx(), f.y0};
    case 270: return {f.x0, f.cy()};
    default: return {f.cx(), f.y1};
  }
}

std::vector<PairedResult> step8_pair(const std::vector<Detection>& dets, const Page& page) {
  std::vector<Detection> figures, captions;
  for (const Detection& d : dets) {
    if (is_figure(d)) figures.push_back(d);
    else if (is_caption(d)) captions.push_back(d);
  }
  struct Cand {
    double dist;
    std::size_t cap, fig;
  };
  std::vector<Cand> cands;
  for (std::size_t c = 0; c < captions.size(); ++c)
    for (std::size_t f = 0; f < figures.size(); ++f) {
      const auto [bx, by] = bottom_midpoint(figures[f].box, page.rotation_deg);
      cands.push_back({std::hypot(captions[c].box.cx() - bx, captions[c].box.cy() - by), c, f});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.dist, a.cap, a.fig) < std::tie(b.dist, b.cap, b.fig);
  });
  std::vector<char> cap_used(captions.size(), 0), fig_used(figures.size(), 0);
  std::vector<PairedResult> out;
  for (std::size_t f = 0; f < figures.size(); ++f) out.push_back({figures[f], std::nullopt, page.source_id});
  for (const Cand& c : cands) {
    if (cap_used[c.cap] || fig_used[c.fig]) continue;
    cap_used[c.cap] = fig_used[c.fig] = 1;
    out[c.fig].caption = captions[c.cap];
  }
  return out;
}

std::vector<PairedResult> step9_extend_to_caption_top(std::vector<PairedResult> pairs,
                                                      int rotation_deg) {
  for (PairedResult& p : pairs) {
    if (!p.caption) continue;
    BoxD& f = p.figure.box;
    const BoxD& c = p.caption->box;
    switch (snap_rotation(rotation_deg)) {
      case 90:
        if (c.x0 > f.x1) f.x1 = c.x0;
        break;
      case 180:
        if (c.y1 < f.y0) f.y0 = c.y1;
        break;
      case 270:
        if (c.x1 < f.x0) f.x0 = c.x1;
        break;
      default:
        if (c.y0 > f.y1) f.y1 = c.y0;
    }
  }
  return pairs;
}

std::vector<PairedResult> step10_extend_horizontal(std::vector<PairedResult> pairs,
                                                   int rotation_deg) {
  const int rot = snap_rotation(rotation_deg);
  for (PairedResult& p : pairs) {
    if (!p.caption) continue;
    BoxD& f = p.figure.box;
    const BoxD& c = p.caption->box;
    if (rot == 90 || rot == 270) {
      f.y0 = std::min(f.y0, c.y0);
      f.y1 = std::max(f.y1, c.y1);
    } else {
      f.x0 = std::min(f.x0, c.x0);
      f.x1 = std::max(f.x1, c.x1);
    }
  }
  return pairs;
}

std::vector<Detection> PipelineResult::final_detections() const {
  return last_step >= 8 ? flatten(pairs) : detections;
}

PipelineResult run_pipeline(std::vector<Detection> raw, const Page& page,
                            std::span<const BoxD> mined_captions, std::span<const BoxD> rects,
                            const PipelineConfig& cfg) {
  PipelineResult r;
  r.last_step = std::clamp(cfg.last_step, 1, 10);
  canonical_sort(raw);
  std::vector<Detection> dets = std::move(raw);
  auto snap = [&](int step) { r.snapshots.push_back({step, dets, {}}); };
  for (int step = 1; step <= std::min(r.last_step, 7); ++step) {
    switch (step) {
      case 1: dets = step1_nms(std::move(dets), cfg.nms_iou, cfg.score_thresh); break;
      case 2: dets = step2_cross_dedupe(std::move(dets), cfg.dedup_iou); break;
      case 3: dets = step3_adopt_mined_captions(std::move(dets), mined_captions); break;
      case 4: dets = step4_heuristic_captions(std::move(dets), page, cfg); break;
      case 5: dets = step5_grow_captions(std::move(dets), page, cfg.grow_max_iters); break;
      case 6: dets = step6_merge_rects(std::move(dets), rects); break;
      case 7: dets = step7_drop_large_captions(std::move(dets), page, cfg.caption_area_max_frac); break;
    }
    snap(step);
  }
  r.detections = dets;
  if (r.last_step < 8) return r;
  std::vector<PairedResult> pairs = step8_pair(dets, page);
  r.snapshots.push_back({8, flatten(pairs), pairs});
  if (r.last_step >= 9) {
    pairs = step9_extend_to_caption_top(std::move(pairs), page.rotation_deg);
    r.snapshots.push_back({9, flatten(pairs), pairs});
  }
  if (r.last_step >= 10) {
    pairs = step10_extend_horizontal(std::move(pairs), page.rotation_deg);
    r.snapshots.push_back({10, flatten(pairs), pairs});
  }
  r.pairs = std::move(pairs);
  return r;
}

namespace {

nlohmann::ordered_json bbox_json(const BoxD& b) { return {b.x0, b.y0, b.x1, b.y1}; }

BoxD bbox_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw SchemaError("bbox must be [x0,y0,x1,y1]");
  const BoxD b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw SchemaError("invalid bbox");
  return b;
}

nlohmann::ordered_json short_json(const std::optional<Detection>& d) {
  if (!d) return nullptr;
  nlohmann::ordered_json j;
  j["bbox"] = bbox_json(d->box);
  j["score"] = d->score;
  return j;
}

}  // namespace

std::vector<Detection> rects_as_figures(std::span<const BoxD> rects) {
  std::vector<Detection> out;
  for (const BoxD& r : rects) out.push_back({r, DetClass::figure, 1.0, Origin::heuristic});
  return out;
}

std::vector<Detection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("detections JSON must be an array");
  std::vector<Detection> out;
  try {
    for (const auto& e : j) {
      Detection d;
      d.box = bbox_from(e.at("bbox"));
      const std::string cls = e.at("class").get<std::string>();
      const auto c = det_class_from_string(cls);
      if (!c) throw SchemaError("unknown class: " + cls);
      d.cls = *c;
      d.score = e.value("score", 1.0);
      if (d.score < 0 || d.score > 1) throw SchemaError("score outside [0,1]");
      const std::string origin = e.value("origin", std::string("model"));
      d.origin = origin == "heuristic" ? Origin::heuristic
                 : origin == "mined"   ? Origin::mined
                                       : Origin::model;
      out.push_back(d);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("detections JSON: ") + e.what());
  }
  return out;
}

nlohmann::ordered_json detections_to_json(std::span<const Detection> dets) {
  auto arr = nlohmann::ordered_json::array();
  for (const Detection& d : dets) {
    nlohmann::ordered_json j;
    j["bbox"] = bbox_json(d.box);
    j["class"] = to_string(d.cls);
    j["score"] = d.score;
    j["origin"] = to_string(d.origin);
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::ordered_json results_to_json(const PipelineResult& r) {
  auto arr = nlohmann::ordered_json::array();
  auto entry = [&](const std::optional<Detection>& f, const std::optional<Detection>& c) {
    nlohmann::ordered_json j;
    j["figure"] = short_json(f);
    j["caption"] = short_json(c);
    arr.push_back(std::move(j));
  };
  if (r.last_step >= 8) {
    for (const PairedResult& p : r.pairs) entry(p.figure, p.caption);
  } else {
    for (const Detection& d : r.detections) {
      if (is_figure(d)) entry(d, std::nullopt);
      else if (is_caption(d)) entry(std::nullopt, d);
    }
  }
  return arr;
}

std::vector<Detection> results_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("results JSON must be an array");
  std::vector<Detection> out;
  try {
    for (const auto& e : j) {
      for (const auto& [key, cls] : {std::pair{"figure", DetClass::figure},
                                     std::pair{"caption", DetClass::figure_caption}}) {
        if (!e.contains(key) || e.at(key).is_null()) continue;
        const auto& d = e.at(key);
        out.push_back({bbox_from(d.at("bbox")), cls, d.value("score", 1.0), Origin::model});
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("results JSON: ") + ex.what());
  }
  return out;
}

nlohmann::ordered_json snapshots_to_json(const PipelineResult& r) {
  auto arr = nlohmann::ordered_json::array();
  for (const StepSnapshot& s : r.snapshots) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["detections"] = detections_to_json(s.detections);
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace figcap
