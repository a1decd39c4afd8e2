#include "figcap/eval.hpp"

#include "figcap/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

namespace figcap {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::TP: return "TP";
    case Outcome::FP: return "FP";
    default: return "FN";
  }
}

std::vector<MatchRecord> match(std::span<const GroundTruth> truths,
                               std::span<const Detection> founds, double iou_thresh) {
  struct Edge {
    double iou;
    std::size_t t, f;
  };
  std::vector<Edge> edges;
  for (std::size_t t = 0; t < truths.size(); ++t)
    for (std::size_t f = 0; f < founds.size(); ++f) {
      const double v = iou(truths[t].box, founds[f].box);
      if (v >= iou_thresh && v > 0) edges.push_back({v, t, f});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.t, a.f) < std::tie(b.t, b.f);
  });
  std::vector<char> t_used(truths.size(), 0), f_used(founds.size(), 0);
  std::vector<MatchRecord> out;
  for (const Edge& e : edges) {
    if (t_used[e.t] || f_used[e.f]) continue;
    t_used[e.t] = f_used[e.f] = 1;
    out.push_back({truths[e.t], founds[e.f], e.iou, Outcome::TP});
  }
  for (std::size_t f = 0; f < founds.size(); ++f)
    if (!f_used[f]) out.push_back({std::nullopt, founds[f], 0, Outcome::FP});
  for (std::size_t t = 0; t < truths.size(); ++t)
    if (!t_used[t]) out.push_back({truths[t], std::nullopt, 0, Outcome::FN});
  return out;
}

Counts count(std::span<const MatchRecord> records) {
  Counts c;
  for (const MatchRecord& r : records) {
    if (r.outcome == Outcome::TP) ++c.tp;
    else if (r.outcome == Outcome::FP) ++c.fp;
    else ++c.fn;
  }
  return c;
}

Prf prf(const Counts& c) {
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) return {1, 1, 1, true};
  Prf m;
  m.precision = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0
             ? 2 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::optional<double> average_precision(std::span<const PageEval> pages, DetClass cls,
                                        double iou_thresh) {
  struct Ranked {
    double score;
    std::size_t page, idx;
  };
  std::vector<Ranked> ranked;
  std::size_t n_truth = 0;
  std::vector<std::vector<std::size_t>> truth_idx(pages.size());
  for (std::size_t p = 0; p < pages.size(); ++p) {
    for (std::size_t i = 0; i < pages[p].truths.size(); ++i)
      if (pages[p].truths[i].cls == cls) truth_idx[p].push_back(i);
    n_truth += truth_idx[p].size();
    for (std::size_t i = 0; i < pages[p].founds.size(); ++i)
      if (pages[p].founds[i].cls == cls) ranked.push_back({pages[p].founds[i].score, p, i});
  }
  if (n_truth == 0) return std::nullopt;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

  std::vector<std::vector<char>> used(pages.size());
  for (std::size_t p = 0; p < pages.size(); ++p) used[p].assign(pages[p].truths.size(), 0);
  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (const Ranked& r : ranked) {
    const BoxD& fb = pages[r.page].founds[r.idx].box;
    double best = iou_thresh;
    std::optional<std::size_t> pick;
    for (std::size_t t : truth_idx[r.page]) {
      if (used[r.page][t]) continue;
      const double v = iou(pages[r.page].truths[t].box, fb);
      if (v >= best && v > 0) {
        best = v;
        pick = t;
      }
    }
    if (pick) {
      used[r.page][*pick] = 1;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_truth));
  }
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r - 1e-12);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

std::optional<double> coco_ap(std::span<const PageEval> pages, DetClass cls) {
  double sum = 0;
  for (int k = 0; k < 10; ++k) {
    const auto ap = average_precision(pages, cls, 0.5 + 0.05 * k);
    if (!ap) return std::nullopt;
    sum += *ap;
  }
  return sum / 10.0;
}

CutoffAnalysis excess_lost_analysis(std::span<const std::pair<BoxD, BoxD>> pairs,
                                    const CutoffParams& params) {
  CutoffAnalysis a;
  std::vector<double> compliant;
  for (const auto& [truth, found] : pairs) {
    const AreaPair el = excess_lost(truth, found);
    PairMeasure m{iou(truth, found), el.excess_frac, el.lost_frac, false};
    m.compliant = m.excess_frac <= params.excess_cut && m.lost_frac <= params.lost_cut;
    if (m.compliant) compliant.push_back(m.iou);
    a.pairs.push_back(m);
  }
  a.compliant = compliant.size();
  if (compliant.empty()) throw NoCompliantPairs("no pair satisfies the excess and lost cuts");

  if (params.mode == CutoffMode::percentile) {
    std::sort(compliant.begin(), compliant.end());
    const auto n = static_cast<double>(compliant.size());
    const auto keep = static_cast<std::size_t>(std::ceil(params.coverage * n - 1e-9));
    a.cutoff = compliant[compliant.size() - std::max<std::size_t>(keep, 1)];
    return a;
  }

  std::vector<PairMeasure> sorted = a.pairs;
  std::sort(sorted.begin(), sorted.end(),
            [](const PairMeasure& x, const PairMeasure& y) { return x.iou < y.iou; });
  // Suffix counts: pairs at or above sorted[i].iou.
  std::size_t above = 0;
  std::vector<std::size_t> ok_suffix(sorted.size() + 1, 0);
  for (std::size_t i = sorted.size(); i-- > 0;)
    ok_suffix[i] = ok_suffix[i + 1] + (sorted[i].compliant ? 1 : 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i].iou == sorted[i - 1].iou) continue;
    above = sorted.size() - i;
    if (static_cast<double>(ok_suffix[i]) >= params.coverage * static_cast<double>(above) - 1e-9) {
      a.cutoff = sorted[i].iou;
      return a;
    }
  }
  throw NoCompliantPairs("no IOU threshold reaches the requested compliance");
}

std::string cutoff_csv(const CutoffAnalysis& a) {
  std::ostringstream os;
  os << std::setprecision(10) << "iou,excess_frac,lost_frac,compliant\n";
  for (const PairMeasure& m : a.pairs)
    os << m.iou << ',' << m.excess_frac << ',' << m.lost_frac << ',' << (m.compliant ? 1 : 0)
       << '\n';
  return os.str();
}

namespace {

template <typename T>
std::vector<T> of_class(std::span<const T> items, DetClass cls) {
  std::vector<T> out;
  for (const T& x : items)
    if (x.cls == cls) out.push_back(x);
  return out;
}

std::vector<DetClass> present_classes(std::span<const PageEval> pages) {
  std::vector<char> seen(4, 0);
  for (const PageEval& p : pages) {
    for (const auto& t : p.truths) seen[static_cast<std::size_t>(t.cls)] = 1;
    for (const auto& f : p.founds) seen[static_cast<std::size_t>(f.cls)] = 1;
  }
  std::vector<DetClass> out;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) out.push_back(static_cast<DetClass>(i));
  return out;
}

Counts page_counts(const PageEval& p, DetClass cls, double thresh) {
  const auto t = of_class<GroundTruth>(p.truths, cls);
  const auto f = of_class<Detection>(p.founds, cls);
  return count(match(t, f, thresh));
}

std::string decade_of(const std::optional<int>& year) {
  if (!year) return "unknown";
  const int y = *year;
  return std::to_string(y >= 0 ? y / 10 * 10 : -((-y + 9) / 10) * 10);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

nlohmann::ordered_json counts_json(const Counts& c, const Prf& m) {
  nlohmann::ordered_json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["empty"] = m.empty;
  return j;
}

}  // namespace

std::vector<std::pair<BoxD, BoxD>> matched_pairs(std::span<const PageEval> pages,
                                                 std::optional<DetClass> cls,
                                                 double iou_thresh) {
  std::vector<std::pair<BoxD, BoxD>> out;
  for (const PageEval& p : pages) {
    for (DetClass c : present_classes(std::span<const PageEval>(&p, 1))) {
      if (cls && c != *cls) continue;
      const auto t = of_class<GroundTruth>(p.truths, c);
      const auto f = of_class<Detection>(p.founds, c);
      for (const MatchRecord& r : match(t, f, iou_thresh))
        if (r.outcome == Outcome::TP) out.emplace_back(r.truth->box, r.found->box);
    }
  }
  return out;
}

EvalReport report(std::span<const PageEval> pages, std::span<const double> thresholds) {
  EvalReport r;
  r.thresholds.assign(thresholds.begin(), thresholds.end());
  const std::vector<DetClass> classes = present_classes(pages);
  const bool any_year =
      std::any_of(pages.begin(), pages.end(), [](const PageEval& p) { return p.year.has_value(); });
  for (DetClass cls : classes) {
    for (double t : thresholds) {
      Counts total;
      std::map<std::string, Counts> by_decade;
      for (const PageEval& p : pages) {
        const Counts c = page_counts(p, cls, t);
        total += c;
        if (any_year) by_decade[decade_of(p.year)] += c;
      }
      r.rows.push_back({cls, t, total, prf(total)});
      for (const auto& [bin, c] : by_decade) r.decades.push_back({bin, cls, t, c, prf(c)});
    }
    r.coco_ap.push_back({cls, coco_ap(pages, cls)});
  }
  std::stable_sort(r.decades.begin(), r.decades.end(), [](const DecadeF1& a, const DecadeF1& b) {
    const bool au = a.bin == "unknown", bu = b.bin == "unknown";
    if (au != bu) return bu;
    if (a.bin != b.bin) return a.bin < b.bin;
    return a.cls < b.cls;
  });
  return r;
}

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["thresholds"] = r.thresholds;
  auto classes = nlohmann::ordered_json::array();
  for (const ClassAp& ca : r.coco_ap) {
    nlohmann::ordered_json c;
    c["class"] = to_string(ca.cls);
    c["coco_ap"] = ca.ap ? nlohmann::ordered_json(*ca.ap) : nlohmann::ordered_json(nullptr);
    auto per = nlohmann::ordered_json::array();
    for (const ThresholdRow& row : r.rows) {
      if (row.cls != ca.cls) continue;
      nlohmann::ordered_json e;
      e["iou"] = row.iou;
      e.update(counts_json(row.counts, row.metrics));
      per.push_back(std::move(e));
    }
    c["thresholds"] = std::move(per);
    classes.push_back(std::move(c));
  }
  j["classes"] = std::move(classes);
  if (!r.decades.empty()) {
    auto dec = nlohmann::ordered_json::array();
    for (const DecadeF1& d : r.decades) {
      nlohmann::ordered_json e;
      e["bin"] = d.bin;
      e["class"] = to_string(d.cls);
      e["iou"] = d.iou;
      e.update(counts_json(d.counts, d.metrics));
      dec.push_back(std::move(e));
    }
    j["decades"] = std::move(dec);
  }
  return j;
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "class,metric";
  for (double t : r.thresholds) os << ",IOU=" << t;
  os << '\n';
  for (const ClassAp& ca : r.coco_ap) {
    std::vector<const ThresholdRow*> rows;
    for (const ThresholdRow& row : r.rows)
      if (row.cls == ca.cls) rows.push_back(&row);
    auto line = [&](const char* name, auto get) {
      os << to_string(ca.cls) << ',' << name;
      for (const ThresholdRow* row : rows) os << ',' << get(*row);
      os << '\n';
    };
    line("TP", [](const ThresholdRow& x) { return std::to_string(x.counts.tp); });
    line("FP", [](const ThresholdRow& x) { return std::to_string(x.counts.fp); });
    line("FN", [](const ThresholdRow& x) { return std::to_string(x.counts.fn); });
    line("Prec", [](const ThresholdRow& x) { return fmt(x.metrics.precision); });
    line("Rec", [](const ThresholdRow& x) { return fmt(x.metrics.recall); });
    line("F1", [](const ThresholdRow& x) { return fmt(x.metrics.f1); });
  }
  return os.str();
}

std::string decade_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "bin,class,iou,tp,fp,fn,f1\n";
  for (const DecadeF1& d : r.decades)
    os << d.bin << ',' << to_string(d.cls) << ',' << d.iou << ',' << d.counts.tp << ','
       << d.counts.fp << ',' << d.counts.fn << ',' << fmt(d.metrics.f1) << '\n';
  return os.str();
}

std::vector<GroundTruth> read_normalized_truth(std::string_view text, int page_width,
                                               int page_height) {
  if (page_width <= 0 || page_height <= 0) throw SchemaError("page size must be positive");
  std::vector<GroundTruth> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int cls = -1;
    double cx, cy, w, h;
    if (!(ls >> cls >> cx >> cy >> w >> h))
      throw SchemaError("truth line " + std::to_string(lineno) + ": expected 'class cx cy w h'");
    if (cls < 0 || cls > 3)
      throw SchemaError("truth line " + std::to_string(lineno) + ": class id out of range");
    if (w <= 0 || h <= 0)
      throw SchemaError("truth line " + std::to_string(lineno) + ": non-positive size");
    const double W = page_width, H = page_height;
    out.push_back({{(cx - w / 2) * W, (cy - h / 2) * H, (cx + w / 2) * W, (cy + h / 2) * H},
                   static_cast<DetClass>(cls)});
  }
  return out;
}

std::string write_normalized_truth(std::span<const GroundTruth> truths, int page_width,
                                   int page_height) {
  std::ostringstream os;
  os << std::setprecision(10);
  const double W = page_width, H = page_height;
  for (const GroundTruth& t : truths)
    os << static_cast<int>(t.cls) << ' ' << t.box.cx() / W << ' ' << t.box.cy() / H << ' '
       << t.box.width() / W << ' ' << t.box.height() / H << '\n';
  return os.str();
}

std::vector<GroundTruth> truths_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("truth JSON must be an array");
  std::vector<GroundTruth> out;
  try {
    for (const auto& e : j) {
      const auto& b = e.at("bbox");
      if (!b.is_array() || b.size() != 4) throw SchemaError("bbox must be [x0,y0,x1,y1]");
      GroundTruth t;
      t.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      if (!t.box.valid()) throw SchemaError("invalid truth bbox");
      const std::string name = e.at("class").get<std::string>();
      const auto cls = det_class_from_string(name);
      if (!cls) throw SchemaError("unknown class: " + name);
      t.cls = *cls;
      out.push_back(t);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("truth JSON: ") + ex.what());
  }
  return out;
}

nlohmann::ordered_json truths_to_json(std::span<const GroundTruth> truths) {
  auto arr = nlohmann::ordered_json::array();
  for (const GroundTruth& t : truths) {
    nlohmann::ordered_json e;
    e["bbox"] = {t.box.x0, t.box.y0, t.box.x1, t.box.y1};
    e["class"] = to_string(t.cls);
    arr.push_back(std::move(e));
  }
  return arr;
}

}  // namespace figcap
