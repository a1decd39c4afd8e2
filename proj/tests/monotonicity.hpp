#pragma once

#include "figcap/postprocess.hpp"
#include "figcap/synth.hpp"
#include "fixtures.hpp"

#include <random>
#include <string>
#include <vector>

namespace figcap::testing {

struct Violations {
  int count = 0;
  std::vector<std::string> notes;

  void fail(const std::string& what) {
    ++count;
    if (notes.size() < 10) notes.push_back(what);
  }
};

inline std::vector<Detection> of_class(const std::vector<Detection>& d, DetClass c) {
  std::vector<Detection> out;
  for (const Detection& x : d)
    if (x.cls == c) out.push_back(x);
  return out;
}

/// Noisy model output for a synthetic page: jittered and duplicated truths,
/// clipped captions, stray boxes of every class.
inline std::vector<Detection> noisy_detections(std::mt19937_64& rng, const SynthPage& sp) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Detection> out;
  for (const GroundTruth& t : sp.truths) {
    const int copies = 1 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < copies; ++k)
      if (u(rng) < 0.9)
        out.push_back({jitter(rng, t.box, 0.05 * k + 0.02), t.cls, 0.1 + 0.9 * u(rng), Origin::model});
  }
  const double w = sp.page.width_px;
  for (int k = static_cast<int>(u(rng) * 4); k > 0; --k)
    out.push_back({random_box(rng, w, 20), static_cast<DetClass>(static_cast<int>(u(rng) * 4)),
                   u(rng), Origin::model});
  if (u(rng) < 0.2)
    out.push_back({{1, 1, w - 1, static_cast<double>(sp.page.height_px) - 1},
                   DetClass::figure_caption, 0.99, Origin::model});
  return out;
}

inline void check_page(std::uint64_t seed, Violations& v) {
  std::mt19937_64 rng(seed * 7919 + 1);
  SynthParams params;
  params.max_figures = 2;
  const SynthPage sp = synth_page(seed, params);
  const Page& page = sp.page;
  std::vector<BoxD> rects;
  for (const BoxD& f : sp.frames) rects.push_back(jitter(rng, f, 0.03));
  rects.push_back(random_box(rng, page.width_px, 50));
  std::vector<BoxD> mined;
  for (const BoxD& c : sp.captions) mined.push_back(jitter(rng, c, 0.05));

  const std::string tag = "page " + std::to_string(seed) + ": ";
  const auto s1 = step1_nms(noisy_detections(rng, sp));
  const auto s2 = step2_cross_dedupe(s1);
  if (!is_subset(s1, s2)) v.fail(tag + "step 2 added a box");
  const auto s3 = step3_adopt_mined_captions(s2, mined);
  if (of_class(s3, DetClass::figure) != of_class(s2, DetClass::figure))
    v.fail(tag + "step 3 changed figures");
  const auto s4 = step4_heuristic_captions(s3, page);
  if (of_class(s4, DetClass::figure) != of_class(s3, DetClass::figure))
    v.fail(tag + "step 4 changed figures");
  const auto s5 = step5_grow_captions(s4, page);
  if (!grows_one_to_one(s4, s5)) v.fail(tag + "step 5 shrank a box");
  const auto s6 = step6_merge_rects(s5, rects);
  if (!grows_one_to_one(s5, s6)) v.fail(tag + "step 6 shrank a box");
  const auto s7 = step7_drop_large_captions(s6, page);
  if (!is_subset(s6, s7)) v.fail(tag + "step 7 added a box");

  const auto p8 = step8_pair(s7, page);
  const auto figs = of_class(s7, DetClass::figure);
  std::vector<Detection> paired_figs, paired_caps;
  for (const PairedResult& p : p8) {
    paired_figs.push_back(p.figure);
    if (p.caption) paired_caps.push_back(*p.caption);
  }
  if (!is_subset(figs, paired_figs) || paired_figs.size() != figs.size())
    v.fail(tag + "pairing duplicated or lost a figure");
  if (!is_subset(of_class(s7, DetClass::figure_caption), paired_caps))
    v.fail(tag + "pairing reused a caption");

  const auto p9 = step9_extend_to_caption_top(p8, page.rotation_deg);
  const auto p10 = step10_extend_horizontal(p9, page.rotation_deg);
  for (std::size_t i = 0; i < p8.size(); ++i) {
    if (!contains(p9[i].figure.box, p8[i].figure.box)) v.fail(tag + "step 9 shrank a figure");
    if (!contains(p10[i].figure.box, p9[i].figure.box)) v.fail(tag + "step 10 shrank a figure");
    if (p9[i].caption != p8[i].caption || p10[i].caption != p9[i].caption)
      v.fail(tag + "steps 9/10 touched a caption");
  }
}

}  // namespace figcap::testing
