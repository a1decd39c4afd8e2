#pragma once

// Random fixtures and brute-force oracles shared by the unit and acceptance tests.

#include "figcap/eval.hpp"
#include "figcap/postprocess.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

namespace figcap::testing {

inline BoxD random_box(std::mt19937_64& rng, double extent, double min_side = 5) {
  std::uniform_real_distribution<double> pos(0, extent - min_side);
  const double x0 = pos(rng), y0 = pos(rng);
  std::uniform_real_distribution<double> wd(min_side, std::max(min_side + 1, extent - x0));
  std::uniform_real_distribution<double> ht(min_side, std::max(min_side + 1, extent - y0));
  return {x0, y0, std::min(extent, x0 + wd(rng)), std::min(extent, y0 + ht(rng))};
}

inline BoxD jitter(std::mt19937_64& rng, const BoxD& b, double frac) {
  std::uniform_real_distribution<double> u(-frac, frac);
  const double w = b.width(), h = b.height();
  BoxD out{b.x0 + u(rng) * w, b.y0 + u(rng) * h, b.x1 + u(rng) * w, b.y1 + u(rng) * h};
  out.x0 = std::max(0.0, out.x0);
  out.y0 = std::max(0.0, out.y0);
  if (out.x1 <= out.x0 + 1) out.x1 = out.x0 + 2;
  if (out.y1 <= out.y0 + 1) out.y1 = out.y0 + 2;
  return out;
}

/// Clustered detections so that overlaps are common. Scores are distinct.
inline std::vector<Detection> random_detections(std::mt19937_64& rng, int n) {
  std::vector<Detection> out;
  const BoxD anchor = random_box(rng, 200, 40);
  std::uniform_int_distribution<int> cls(0, 1);
  std::vector<double> scores;
  std::uniform_real_distribution<double> s(0.0, 1.0);
  while (static_cast<int>(scores.size()) < n) {
    const double v = s(rng);
    if (std::find(scores.begin(), scores.end(), v) == scores.end()) scores.push_back(v);
  }
  for (int i = 0; i < n; ++i)
    out.push_back({jitter(rng, anchor, 0.4), static_cast<DetClass>(cls(rng)), scores[i],
                   Origin::model});
  return out;
}

/// Every subset S of the score-filtered input for which each member is
/// unsuppressed by higher-scored same-class members of S, and each non-member
/// is suppressed by one. Greedy NMS output is the unique such set.
inline std::vector<std::vector<Detection>> nms_oracle(const std::vector<Detection>& raw,
                                                      double iou_thresh, double score_thresh) {
  std::vector<Detection> in;
  for (const Detection& d : raw)
    if (d.score >= score_thresh) in.push_back(d);
  const std::size_t n = in.size();
  std::vector<std::vector<Detection>> solutions;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      bool suppressed = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || !(mask >> j & 1u)) continue;
        if (in[j].cls == in[i].cls && in[j].score > in[i].score &&
            iou(in[i].box, in[j].box) >= iou_thresh)
          suppressed = true;
      }
      const bool member = mask >> i & 1u;
      ok = member != suppressed;
    }
    if (!ok) continue;
    std::vector<Detection> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) s.push_back(in[i]);
    solutions.push_back(std::move(s));
  }
  return solutions;
}

inline bool same_set(std::vector<Detection> a, std::vector<Detection> b) {
  auto key = [](const Detection& d) {
    return std::make_tuple(d.score, d.cls, d.box.x0, d.box.y0, d.box.x1, d.box.y1);
  };
  auto less = [&](const Detection& x, const Detection& y) { return key(x) < key(y); };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  return a == b;
}

struct MatchingOracle {
  std::size_t max_cardinality = 0;
  /// Matching whose edges, sorted by the edge order (IOU descending, then
  /// truth index, then found index), are lexicographically first.
  std::vector<std::pair<std::size_t, std::size_t>> lex_first;
};

/// Enumerates every partial one-to-one assignment over edges with IOU >= thresh.
inline MatchingOracle matching_oracle(const std::vector<GroundTruth>& truths,
                                      const std::vector<Detection>& founds, double thresh) {
  struct Edge {
    double iou;
    std::size_t t, f;
  };
  auto before = [](const Edge& a, const Edge& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.t, a.f) < std::tie(b.t, b.f);
  };
  MatchingOracle best;
  std::vector<Edge> best_edges;
  bool have = false;
  std::vector<std::optional<std::size_t>> assign(truths.size());
  std::vector<char> used(founds.size(), 0);

  auto evaluate = [&] {
    std::vector<Edge> edges;
    for (std::size_t t = 0; t < truths.size(); ++t)
      if (assign[t]) edges.push_back({iou(truths[t].box, founds[*assign[t]].box), t, *assign[t]});
    best.max_cardinality = std::max(best.max_cardinality, edges.size());
    std::sort(edges.begin(), edges.end(), before);
    bool better = !have;
    if (have) {
      const std::size_t n = std::min(edges.size(), best_edges.size());
      std::size_t i = 0;
      while (i < n && !before(edges[i], best_edges[i]) && !before(best_edges[i], edges[i])) ++i;
      better = i < n ? before(edges[i], best_edges[i]) : edges.size() > best_edges.size();
    }
    if (better) {
      best_edges = edges;
      have = true;
    }
  };
  auto rec = [&](auto&& self, std::size_t t) -> void {
    if (t == truths.size()) {
      evaluate();
      return;
    }
    assign[t].reset();
    self(self, t + 1);
    for (std::size_t f = 0; f < founds.size(); ++f) {
      if (used[f]) continue;
      const double v = iou(truths[t].box, founds[f].box);
      if (v < thresh || v <= 0) continue;
      used[f] = 1;
      assign[t] = f;
      self(self, t + 1);
      used[f] = 0;
      assign[t].reset();
    }
  };
  rec(rec, 0);
  for (const Edge& e : best_edges) best.lex_first.emplace_back(e.t, e.f);
  std::sort(best.lex_first.begin(), best.lex_first.end());
  return best;
}

/// Layout-like matching fixture: disjoint truths, founds jittered from them
/// plus stray boxes, at most `max_boxes` per side.
inline std::pair<std::vector<GroundTruth>, std::vector<Detection>> layout_fixture(
    std::mt19937_64& rng, int max_boxes) {
  std::uniform_int_distribution<int> count(1, max_boxes);
  std::vector<GroundTruth> truths;
  const int nt = count(rng);
  for (int tries = 0; static_cast<int>(truths.size()) < nt && tries < 200; ++tries) {
    const BoxD b = random_box(rng, 1000, 60);
    const bool clash = std::any_of(truths.begin(), truths.end(), [&](const GroundTruth& t) {
      return intersection(t.box, b).area() > 0;
    });
    if (!clash) truths.push_back({b, DetClass::figure});
  }
  std::vector<Detection> founds;
  std::uniform_real_distribution<double> u(0, 1);
  for (const GroundTruth& t : truths)
    if (u(rng) < 0.85 && static_cast<int>(founds.size()) < max_boxes)
      founds.push_back({jitter(rng, t.box, 0.08), DetClass::figure, u(rng), Origin::model});
  std::uniform_int_distribution<int> strays(0, 2);
  for (int k = strays(rng); k > 0 && static_cast<int>(founds.size()) < max_boxes; --k)
    founds.push_back({random_box(rng, 1000, 30), DetClass::figure, u(rng), Origin::model});
  return {truths, founds};
}

/// True when every `before` box maps one-to-one onto an `after` box of the
/// same class that contains it.
inline bool grows_one_to_one(const std::vector<Detection>& before,
                             const std::vector<Detection>& after) {
  if (before.size() != after.size()) return false;
  std::vector<int> owner(after.size(), -1);
  auto try_assign = [&](auto&& self, std::size_t i, std::vector<char>& seen) -> bool {
    for (std::size_t j = 0; j < after.size(); ++j) {
      if (seen[j] || after[j].cls != before[i].cls || !contains(after[j].box, before[i].box))
        continue;
      seen[j] = 1;
      if (owner[j] < 0 || self(self, static_cast<std::size_t>(owner[j]), seen)) {
        owner[j] = static_cast<int>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < before.size(); ++i) {
    std::vector<char> seen(after.size(), 0);
    if (!try_assign(try_assign, i, seen)) return false;
  }
  return true;
}

/// True when `after` is a sub-multiset of `before`.
inline bool is_subset(const std::vector<Detection>& before, const std::vector<Detection>& after) {
  std::vector<char> used(before.size(), 0);
  for (const Detection& a : after) {
    bool found = false;
    for (std::size_t i = 0; i < before.size() && !found; ++i)
      if (!used[i] && before[i] == a) found = used[i] = 1;
    if (!found) return false;
  }
  return true;
}

}  // namespace figcap::testing
