#include "figcap/error.hpp"
#include "figcap/postprocess.hpp"
#include "figcap/synth.hpp"
#include "fixtures.hpp"
#include "monotonicity.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace figcap;
using namespace figcap::testing;

namespace {

Detection fig(BoxD b, double s = 0.9) { return {b, DetClass::figure, s, Origin::model}; }
Detection cap(BoxD b, double s = 0.9) { return {b, DetClass::figure_caption, s, Origin::model}; }

Page page_of(int w, int h) {
  Page p;
  p.width_px = w;
  p.height_px = h;
  return p;
}

void add_line(Page& p, const std::vector<std::string>& words, double x, double y, double h = 14) {
  for (const std::string& w : words) {
    const double width = 8.0 * static_cast<double>(w.size());
    p.words.push_back({{x, y, x + width, y + h}, w, 90, 10, 3, 3, 0});
    x += width + 6;
  }
}

}  // namespace

TEST(Step1, Examples) {
  auto out = step1_nms({fig({0, 0, 100, 100}, 0.8), fig({0, 0, 100, 100}, 0.9)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
  out = step1_nms({fig({0, 0, 10, 10}), fig({50, 50, 60, 60}, 0.8)});
  EXPECT_EQ(out.size(), 2u);
  out = step1_nms({fig({0, 0, 10, 10}, 0.2)});
  EXPECT_TRUE(out.empty());
  // Different classes never suppress each other.
  out = step1_nms({fig({0, 0, 100, 100}), cap({0, 0, 100, 100}, 0.8)});
  EXPECT_EQ(out.size(), 2u);
}

TEST(Step1, ChainOfThree) {
  // a-b and b-c overlap above 0.5, a-c below: greedy keeps a and c.
  const std::vector<Detection> chain{fig({0, 0, 100, 100}, 0.9), fig({30, 0, 130, 100}, 0.8),
                                     fig({60, 0, 160, 100}, 0.7)};
  const auto out = step1_nms(chain);
  const auto oracle = nms_oracle(chain, 0.5, 0.25);
  ASSERT_EQ(oracle.size(), 1u);
  EXPECT_TRUE(same_set(out, oracle[0]));
  EXPECT_EQ(out.size(), 2u);
}

TEST(Step1, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 6;
    const auto raw = random_detections(rng, n);
    const auto oracle = nms_oracle(raw, 0.5, 0.25);
    ASSERT_EQ(oracle.size(), 1u);
    ASSERT_TRUE(same_set(step1_nms(raw), oracle[0])) << "trial " << trial;
  }
}

TEST(Step2, Examples) {
  // 0.3 overlap: figure (0,0,100,100) vs caption (0,0,100,100*0.3)
  auto out = step2_cross_dedupe({fig({0, 0, 100, 100}, 0.9), cap({0, 70, 100, 100}, 0.3)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].cls, DetClass::figure);
  out = step2_cross_dedupe({fig({0, 0, 100, 100}, 0.9), cap({0, 80, 100, 100}, 0.3)});
  EXPECT_EQ(out.size(), 2u);
  out = step2_cross_dedupe({cap({0, 0, 100, 100}, 0.5), fig({0, 0, 100, 120}, 0.5)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].cls, DetClass::figure);
}

TEST(Step3, Examples) {
  const std::vector<BoxD> mined{{0, 105, 100, 140}, {500, 500, 600, 550}};
  auto out = step3_adopt_mined_captions({cap({0, 100, 90, 130}, 0.7)}, mined);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].box, mined[0]);
  EXPECT_EQ(out[0].origin, Origin::mined);
  EXPECT_EQ(out[0].score, 0.7);
  const std::vector<Detection> in{cap({0, 300, 90, 330})};
  EXPECT_EQ(step3_adopt_mined_captions(in, mined), in);
  EXPECT_EQ(step3_adopt_mined_captions(in, {}), in);
}

TEST(Step4, FuzzyKeywords) {
  const std::vector<std::string> kw{"Fig.", "Figure", "Plate"};
  EXPECT_TRUE(fuzzy_keyword_match("Fig.", kw, 1));
  EXPECT_TRUE(fuzzy_keyword_match("Fjg.", kw, 1));
  EXPECT_TRUE(fuzzy_keyword_match("FIGURE", kw, 1));
  EXPECT_TRUE(fuzzy_keyword_match("Plate", kw, 1));
  EXPECT_TRUE(fuzzy_keyword_match("Fig.3:", kw, 1));
  EXPECT_FALSE(fuzzy_keyword_match("Fjq.", kw, 1));
  EXPECT_FALSE(fuzzy_keyword_match("figaro", kw, 1));
  EXPECT_FALSE(fuzzy_keyword_match("", kw, 1));
  for (const std::string& w : filler_words()) EXPECT_FALSE(fuzzy_keyword_match(w, kw, 1)) << w;
}

TEST(Step4, CaptionParagraphUnderFigure) {
  Page p = page_of(800, 1000);
  add_line(p, {"lorem", "ipsum", "dolor"}, 50, 50);
  add_line(p, {"Fig.", "3.", "The", "velocity", "curve"}, 100, 500);
  add_line(p, {"of", "the", "star"}, 100, 521);
  add_line(p, {"sit", "amet"}, 50, 800);
  const auto caps = find_heuristic_captions(p);
  ASSERT_EQ(caps.size(), 1u);
  EXPECT_EQ(caps[0].y0, 500);
  EXPECT_EQ(caps[0].y1, 535);
  const auto out = step4_heuristic_captions({}, p);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].origin, Origin::heuristic);
}

TEST(Step4, OcrErrorStillMatches) {
  Page p = page_of(800, 1000);
  add_line(p, {"Fjg.", "2.", "spectra"}, 100, 400);
  EXPECT_EQ(find_heuristic_captions(p).size(), 1u);
}

TEST(Step4, NoKeywordsLeavesDetections) {
  Page p = page_of(800, 1000);
  add_line(p, {"lorem", "ipsum"}, 100, 400);
  const std::vector<Detection> in{fig({10, 10, 300, 300})};
  EXPECT_EQ(step4_heuristic_captions(in, p), in);
}

TEST(Step4, MergeRule) {
  Page p = page_of(800, 1000);
  add_line(p, {"Figure", "1.", "spectra"}, 100, 400);
  const auto h = find_heuristic_captions(p);
  ASSERT_EQ(h.size(), 1u);
  const auto out = step4_heuristic_captions({cap({120, 390, 400, 430})}, p);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].box, (BoxD{100, h[0].y0, 400, 430}));
}

TEST(Step5, Examples) {
  Page p = page_of(800, 1000);
  add_line(p, {"Figure", "1.", "light", "curve"}, 100, 400);
  const BoxD last = p.words.back().box;
  auto out = step5_grow_captions({cap({100, 400, last.cx() + 1, 414})}, p);
  EXPECT_EQ(out[0].box.x1, last.x1);
  out = step5_grow_captions({cap({100, 400, last.cx() - 5, 414})}, p);
  EXPECT_EQ(out[0].box.x1, last.cx() - 5);
}

TEST(Step6, Examples) {
  const std::vector<Detection> in{fig({100, 100, 200, 200})};
  EXPECT_EQ(step6_merge_rects(in, {}), in);
  auto out = step6_merge_rects(in, std::vector<BoxD>{{150, 150, 260, 220}});
  EXPECT_EQ(out[0].box, (BoxD{100, 100, 260, 220}));
  out = step6_merge_rects(in, std::vector<BoxD>{{150, 150, 260, 220}, {90, 190, 120, 300}});
  EXPECT_EQ(out[0].box, (BoxD{90, 100, 260, 300}));
  // A rect touching only the grown hull still joins.
  out = step6_merge_rects(in, std::vector<BoxD>{{300, 300, 400, 400}, {150, 150, 320, 320}});
  EXPECT_EQ(out[0].box, (BoxD{100, 100, 400, 400}));
}

TEST(Step7, Examples) {
  const Page p = page_of(100, 100);
  EXPECT_TRUE(step7_drop_large_captions({cap({0, 0, 100, 80})}, p).empty());
  EXPECT_EQ(step7_drop_large_captions({cap({0, 0, 100, 74})}, p).size(), 1u);
  EXPECT_EQ(step7_drop_large_captions({fig({0, 0, 100, 100})}, p).size(), 1u);
}

TEST(Step8, Examples) {
  const Page p = page_of(1000, 1000);
  auto pairs = step8_pair({fig({100, 100, 500, 400}), cap({100, 420, 500, 460})}, p);
  ASSERT_EQ(pairs.size(), 1u);
  ASSERT_TRUE(pairs[0].caption);
  pairs = step8_pair({cap({100, 420, 500, 460})}, p);
  EXPECT_TRUE(pairs.empty());
}

TEST(Step8, StackedLayoutsMatchMinCostAssignment) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<Detection> dets;
    double y = 20;
    for (int i = 0; i < n; ++i) {
      const double x0 = 50 + 200 * u(rng), w = 300 + 300 * u(rng), h = 80 + 120 * u(rng);
      dets.push_back(fig({x0, y, x0 + w, y + h}));
      y += h + 10 + 30 * u(rng);
      const double cw = w * (0.6 + 0.6 * u(rng)), ch = 15 + 40 * u(rng);
      dets.push_back(cap({x0, y, x0 + cw, y + ch}));
      y += ch + 30 + 40 * u(rng);
    }
    std::shuffle(dets.begin(), dets.end(), rng);
    const Page p = page_of(2000, static_cast<int>(y) + 10);
    const auto pairs = step8_pair(dets, p);

    std::vector<Detection> figs, caps;
    for (const Detection& d : dets) (d.cls == DetClass::figure ? figs : caps).push_back(d);
    std::vector<std::size_t> perm(caps.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    std::vector<std::size_t> best_perm;
    do {
      double cost = 0;
      for (std::size_t f = 0; f < figs.size(); ++f) {
        const auto [bx, by] = bottom_midpoint(figs[f].box, 0);
        cost += std::hypot(caps[perm[f]].box.cx() - bx, caps[perm[f]].box.cy() - by);
      }
      if (cost < best) {
        best = cost;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t f = 0; f < figs.size(); ++f) {
      const auto it = std::find_if(pairs.begin(), pairs.end(),
                                   [&](const PairedResult& r) { return r.figure == figs[f]; });
      ASSERT_NE(it, pairs.end());
      ASSERT_TRUE(it->caption);
      EXPECT_EQ(*it->caption, caps[best_perm[f]]) << "trial " << trial;
    }
  }
}

TEST(Step8, RotationChoosesBottomEdge) {
  const BoxD f{100, 200, 300, 600};
  EXPECT_EQ(bottom_midpoint(f, 0), std::make_pair(200.0, 600.0));
  EXPECT_EQ(bottom_midpoint(f, 90), std::make_pair(300.0, 400.0));
  EXPECT_EQ(bottom_midpoint(f, 180), std::make_pair(200.0, 200.0));
  EXPECT_EQ(bottom_midpoint(f, 270), std::make_pair(100.0, 400.0));
}

TEST(Step9, Examples) {
  std::vector<PairedResult> pairs{{fig({100, 100, 500, 400}), cap({100, 430, 500, 460}), "p"}};
  auto out = step9_extend_to_caption_top(pairs);
  EXPECT_EQ(out[0].figure.box.y1, 430);
  pairs[0].caption.reset();
  EXPECT_EQ(step9_extend_to_caption_top(pairs), pairs);
  pairs[0].caption = cap({100, 380, 500, 460});
  EXPECT_EQ(step9_extend_to_caption_top(pairs)[0].figure.box.y1, 400);
  pairs[0].caption = cap({530, 100, 560, 400});
  EXPECT_EQ(step9_extend_to_caption_top(pairs, 90)[0].figure.box.x1, 530);
}

TEST(Step10, Examples) {
  std::vector<PairedResult> pairs{{fig({100, 100, 500, 400}), cap({80, 430, 560, 460}), "p"}};
  auto out = step10_extend_horizontal(pairs);
  EXPECT_EQ(out[0].figure.box, (BoxD{80, 100, 560, 400}));
  pairs[0].caption = cap({150, 430, 300, 460});
  EXPECT_EQ(step10_extend_horizontal(pairs)[0].figure.box, (BoxD{100, 100, 500, 400}));
  // Rotated page: caption beside the figure; its vertical extent is the "horizontal".
  pairs[0].caption = cap({520, 60, 550, 450});
  EXPECT_EQ(step10_extend_horizontal(pairs, 90)[0].figure.box, (BoxD{100, 60, 500, 450}));
}

TEST(Pipeline, LastStepOneEqualsStep1) {
  std::mt19937_64 rng(1);
  const auto raw = random_detections(rng, 6);
  PipelineConfig cfg;
  cfg.last_step = 1;
  const auto r = run_pipeline(raw, page_of(300, 300), {}, {}, cfg);
  EXPECT_EQ(r.detections, step1_nms(raw));
  EXPECT_EQ(r.snapshots.size(), 1u);
}

TEST(Pipeline, TenSnapshotsAndOrderIndependence) {
  const SynthPage sp = synth_page(77);
  std::mt19937_64 rng(77);
  auto raw = noisy_detections(rng, sp);
  const auto a = run_pipeline(raw, sp.page, sp.captions, sp.frames);
  EXPECT_EQ(a.snapshots.size(), 10u);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(raw.begin(), raw.end(), rng);
    const auto b = run_pipeline(raw, sp.page, sp.captions, sp.frames);
    EXPECT_EQ(a.pairs, b.pairs);
  }
}

TEST(Pipeline, MonotonicityOnSyntheticPages) {
  Violations v;
  for (std::uint64_t seed = 0; seed < 30; ++seed) check_page(seed, v);
  EXPECT_EQ(v.count, 0) << (v.notes.empty() ? "" : v.notes.front());
}

TEST(PipelineJson, DetectionsRoundTripAndErrors) {
  const std::vector<Detection> d{fig({1, 2, 3, 4}, 0.5), cap({5, 6, 7, 8}, 1.0)};
  EXPECT_EQ(detections_from_json(nlohmann::json::parse(detections_to_json(d).dump())), d);
  EXPECT_THROW(detections_from_json(nlohmann::json::parse(R"([{"bbox":[0,0,1,1],"class":"dog"}])")),
               SchemaError);
  EXPECT_THROW(
      detections_from_json(nlohmann::json::parse(R"([{"bbox":[0,0,1,1],"class":"figure","score":2}])")),
      SchemaError);
}

TEST(PipelineJson, ResultsShape) {
  const SynthPage sp = synth_page(4);
  const auto r = run_pipeline(rects_as_figures(sp.frames), sp.page, {}, sp.frames);
  const auto j = results_to_json(r);
  ASSERT_EQ(j.size(), sp.frames.size());
  EXPECT_TRUE(j[0].contains("figure"));
  EXPECT_TRUE(j[0].contains("caption"));
  EXPECT_EQ(results_from_json(nlohmann::json::parse(j.dump())).size(), r.final_detections().size());
}
