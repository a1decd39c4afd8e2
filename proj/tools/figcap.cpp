// Batch driver: every stage of the toolkit as a subcommand.

#include "figcap/config.hpp"
#include "figcap/error.hpp"
#include "figcap/eval.hpp"
#include "figcap/features.hpp"
#include "figcap/hocr.hpp"
#include "figcap/image.hpp"
#include "figcap/io.hpp"
#include "figcap/mining.hpp"
#include "figcap/postprocess.hpp"
#include "figcap/rect_finder.hpp"
#include "figcap/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace figcap;

namespace {

struct Globals {
  std::string root = ".";
  std::string config_path;
  std::optional<int> jobs;
  bool trace = false;
  RunConfig cfg;

  fs::path at(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(root) / path;
  }
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads and returns the message
// of every item that threw, in item order.
template <typename Fn>
std::vector<std::optional<std::string>> run_items(std::size_t n, int jobs, Fn fn) {
  std::vector<std::optional<std::string>> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  }
  return errors;
}

// Prints failures; returns the number of them.
std::size_t report_failures(const std::vector<fs::path>& items,
                            const std::vector<std::optional<std::string>>& errors) {
  std::size_t failed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!errors[i]) continue;
    ++failed;
    std::cerr << "error: " << items[i].filename().string() << ": " << *errors[i] << '\n';
  }
  return failed;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

nlohmann::json load_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

fs::path find_image(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".pgm"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  throw IoError("no image for " + stem + " in " + dir.string());
}

std::vector<fs::path> inputs_or_throw(const fs::path& dir, const std::vector<std::string>& exts) {
  std::vector<fs::path> files = list_files(dir, exts);
  std::erase_if(files, [](const fs::path& p) {
    const std::string n = p.filename().string();
    return n.size() > 11 && n.ends_with(".trace.json");
  });
  if (files.empty()) throw IoError("no inputs in " + dir.string());
  return files;
}

std::vector<BoxD> boxes_of(const std::vector<RectCandidate>& cands) {
  std::vector<BoxD> out;
  for (const RectCandidate& c : cands) out.push_back(c.box);
  return out;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string in, out;
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
  const auto files = list_files(g.at(a.in), {".hocr", ".html", ".xhtml", ".htm"});
  if (files.empty()) {
    std::cerr << "no inputs in " << g.at(a.in).string() << '\n';
    return 1;
  }
  std::vector<std::size_t> warnings(files.size(), 0);
  const auto errors = run_items(files.size(), g.cfg.jobs, [&](std::size_t i) {
    HocrOptions opts;
    opts.source_id = files[i].stem().string();
    opts.dpi_effective = g.cfg.dpi_effective;
    const ParsedPage parsed = parse_hocr(read_file(files[i]), opts);
    warnings[i] = parsed.diagnostics.warning_count();
    write_file_atomic(g.at(a.out) / (opts.source_id + ".json"), dump(page_to_json(parsed.page)));
  });
  const std::size_t failed = report_failures(files, errors);
  std::size_t total_warnings = 0;
  for (std::size_t w : warnings) total_warnings += w;
  std::cout << "ingested " << files.size() - failed << "/" << files.size() << " files, "
            << total_warnings << " parse warnings";
  if (failed) {
    std::cout << "; failed:";
    for (std::size_t i = 0; i < files.size(); ++i)
      if (errors[i]) std::cout << ' ' << files[i].filename().string();
  }
  std::cout << '\n';
  return failed == files.size() ? 1 : 0;
}

// ---------------------------------------------------------------- features

struct FeaturesArgs {
  std::string pages, images, out, tags;
  std::optional<std::string> channels;
};

int cmd_features(const Globals& g, const FeaturesArgs& a) {
  const std::vector<ChannelId> channels = parse_channel_set(a.channels.value_or(g.cfg.channels));
  const auto files = inputs_or_throw(g.at(a.pages), {".json"});
  const auto errors = run_items(files.size(), g.cfg.jobs, [&](std::size_t i) {
    const std::string stem = files[i].stem().string();
    const Page page = page_from_json(load_json(files[i]));
    const GrayImage img = read_gray(find_image(g.at(a.images), stem));
    TagProvider provider = fallback_tag_provider();
    if (!a.tags.empty()) {
      const fs::path sidecar = g.at(a.tags) / (stem + ".json");
      if (fs::exists(sidecar)) provider = sidecar_tag_provider(parse_tag_sidecar(load_json(sidecar)));
    }
    const FeatureStack stack = rasterize(page, img, channels, provider);
    std::ostringstream os;
    write_fstk(os, stack);
    write_file_atomic(g.at(a.out) / (stem + ".fstk"), os.str());
  });
  const std::size_t failed = report_failures(files, errors);
  std::cout << "wrote " << files.size() - failed << "/" << files.size() << " stacks with "
            << channels.size() << " channels\n";
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------- rects

struct RectsArgs {
  std::string pages, images, out;
};

int cmd_rects(const Globals& g, const RectsArgs& a) {
  const auto files = inputs_or_throw(g.at(a.pages), {".json"});
  std::atomic<std::size_t> total{0};
  const auto errors = run_items(files.size(), g.cfg.jobs, [&](std::size_t i) {
    const std::string stem = files[i].stem().string();
    const Page page = page_from_json(load_json(files[i]));
    const GrayImage img = read_gray(find_image(g.at(a.images), stem));
    const auto cands = detect_rectangles(img, page);
    total += cands.size();
    write_file_atomic(g.at(a.out) / (stem + ".json"), dump(candidates_to_json(cands)));
  });
  const std::size_t failed = report_failures(files, errors);
  std::cout << "found " << total << " rectangles on " << files.size() - failed << "/"
            << files.size() << " pages\n";
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  std::string pages, out, detections, mined, rects, images;
  std::optional<int> last_step;
};

int cmd_pipeline(const Globals& g, const PipelineArgs& a) {
  PipelineConfig cfg = g.cfg.pipeline;
  if (a.last_step) cfg.last_step = *a.last_step;
  if (cfg.last_step < 1 || cfg.last_step > 10) throw UsageError("--last-step must be in 1..10");
  if (a.detections.empty() && a.rects.empty() && a.images.empty())
    throw UsageError("heuristic mode needs --rects or --images when --detections is absent");
  const auto files = inputs_or_throw(g.at(a.pages), {".json"});
  const auto errors = run_items(files.size(), g.cfg.jobs, [&](std::size_t i) {
    const std::string stem = files[i].stem().string();
    const Page page = page_from_json(load_json(files[i]));

    std::vector<BoxD> rects;
    if (!a.rects.empty()) {
      rects = boxes_of(candidates_from_json(load_json(g.at(a.rects) / (stem + ".json"))));
    } else if (!a.images.empty()) {
      rects = boxes_of(detect_rectangles(read_gray(find_image(g.at(a.images), stem)), page));
    }

    std::vector<Detection> raw = a.detections.empty()
                                     ? rects_as_figures(rects)
                                     : detections_from_json(load_json(g.at(a.detections) / (stem + ".json")));

    std::vector<BoxD> mined;
    if (!a.mined.empty()) {
      const fs::path mp = g.at(a.mined) / (stem + ".json");
      if (fs::exists(mp))
        for (const MinedObject& o : parse_pdffigures2(load_json(mp), g.cfg.dpi_effective))
          if (o.kind == ObjectKind::figure && o.caption_box) mined.push_back(*o.caption_box);
    }

    const PipelineResult r = run_pipeline(std::move(raw), page, mined, rects, cfg);
    write_file_atomic(g.at(a.out) / (stem + ".json"), dump(results_to_json(r)));
    if (g.cfg.trace)
      write_file_atomic(g.at(a.out) / (stem + ".trace.json"), dump(snapshots_to_json(r)));
  });
  const std::size_t failed = report_failures(files, errors);
  std::cout << "processed " << files.size() - failed << "/" << files.size()
            << " pages through step " << cfg.last_step << '\n';
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string results, truths, out, pages, meta;
  bool cutoff_analysis = false;
  std::optional<std::string> cutoff_mode;
  std::optional<std::string> thresholds;
};

std::optional<int> year_for(const std::map<std::string, ArticleMeta>& meta, const std::string& stem) {
  if (auto it = meta.find(stem); it != meta.end()) return it->second.year;
  std::optional<int> best;
  std::size_t best_len = 0;
  for (const auto& [id, m] : meta) {
    if (id.size() > best_len && stem.size() > id.size() && stem.starts_with(id) &&
        stem[id.size()] == '_') {
      best = m.year;
      best_len = id.size();
    }
  }
  return best;
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
  std::vector<double> thresholds = g.cfg.thresholds;
  if (a.thresholds) thresholds = parse_number_list(*a.thresholds);
  CutoffParams cutoff = g.cfg.cutoff;
  if (a.cutoff_mode) {
    if (*a.cutoff_mode == "percentile") cutoff.mode = CutoffMode::percentile;
    else if (*a.cutoff_mode == "threshold") cutoff.mode = CutoffMode::threshold;
    else throw UsageError("--cutoff-mode must be percentile or threshold");
  }
  std::map<std::string, ArticleMeta> meta;
  if (!a.meta.empty()) meta = parse_article_metadata(read_file(g.at(a.meta)));

  const auto files = inputs_or_throw(g.at(a.results), {".json"});
  std::vector<PageEval> pages(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string stem = files[i].stem().string();
    PageEval& pe = pages[i];
    pe.page_id = stem;
    pe.founds = results_from_json(load_json(files[i]));
    const fs::path json_truth = g.at(a.truths) / (stem + ".json");
    const fs::path text_truth = g.at(a.truths) / (stem + ".txt");
    if (fs::exists(json_truth)) {
      pe.truths = truths_from_json(load_json(json_truth));
    } else if (fs::exists(text_truth)) {
      if (a.pages.empty()) throw UsageError("normalized truth files need --pages for page sizes");
      const Page page = page_from_json(load_json(g.at(a.pages) / (stem + ".json")));
      pe.truths = read_normalized_truth(read_file(text_truth), page.width_px, page.height_px);
    } else {
      throw IoError("missing truth file for " + stem + " in " + g.at(a.truths).string());
    }
    if (!meta.empty()) pe.year = year_for(meta, stem);
  }

  const EvalReport r = report(pages, thresholds);
  nlohmann::ordered_json j = report_to_json(r);
  const fs::path out = g.at(a.out);
  if (a.cutoff_analysis) {
    const auto pairs = matched_pairs(pages, std::nullopt);
    const CutoffAnalysis ca = excess_lost_analysis(pairs, cutoff);
    nlohmann::ordered_json c;
    c["mode"] = cutoff.mode == CutoffMode::percentile ? "percentile" : "threshold";
    c["excess_cut"] = cutoff.excess_cut;
    c["lost_cut"] = cutoff.lost_cut;
    c["coverage"] = cutoff.coverage;
    c["pairs"] = ca.pairs.size();
    c["compliant"] = ca.compliant;
    c["iou_cutoff"] = ca.cutoff;
    j["cutoff_analysis"] = std::move(c);
    write_file_atomic(out / "excess_lost.csv", cutoff_csv(ca));
    std::cout << "IOU cutoff " << ca.cutoff << " from " << ca.compliant << "/" << ca.pairs.size()
              << " compliant pairs\n";
  }
  write_file_atomic(out / "report.json", dump(j));
  write_file_atomic(out / "report.csv", report_csv(r));
  if (!r.decades.empty()) write_file_atomic(out / "decades.csv", decade_csv(r));
  for (const ThresholdRow& row : r.rows)
    std::printf("%-15s IOU=%.2f  P=%.3f R=%.3f F1=%.3f\n", to_string(row.cls), row.iou,
                row.metrics.precision, row.metrics.recall, row.metrics.f1);
  return 0;
}

// ---------------------------------------------------------------- parsability

struct ParsabilityArgs {
  std::vector<std::string> miners;
  std::string meta, out;
};

int cmd_parsability(const Globals& g, const ParsabilityArgs& a) {
  std::map<std::string, ArticleMeta> meta;
  if (!a.meta.empty()) meta = parse_article_metadata(read_file(g.at(a.meta)));
  std::vector<ArticleRecord> records;
  std::size_t failed = 0;
  for (const std::string& spec : a.miners) {
    const auto eq = spec.find('=');
    const std::string tool = eq == std::string::npos ? fs::path(spec).filename().string()
                                                     : spec.substr(0, eq);
    const std::string dir = eq == std::string::npos ? spec : spec.substr(eq + 1);
    const auto files = inputs_or_throw(g.at(dir), {".json"});
    std::vector<ArticleRecord> recs(files.size());
    const auto errors = run_items(files.size(), g.cfg.jobs, [&](std::size_t i) {
      const std::string id = files[i].stem().string();
      const auto objects = parse_pdffigures2(load_json(files[i]), g.cfg.dpi_effective);
      recs[i].tool = tool;
      recs[i].verdict = article_parsability(id, objects);
      if (auto it = meta.find(id); it != meta.end()) recs[i].year = it->second.year;
    });
    failed += report_failures(files, errors);
    for (std::size_t i = 0; i < files.size(); ++i)
      if (!errors[i]) records.push_back(std::move(recs[i]));
  }
  const auto rows = corpus_report(records);
  write_file_atomic(g.at(a.out), corpus_report_csv(rows));
  for (const DecadeRow& r : rows)
    if (r.bin == "all")
      std::printf("%s: %d articles, figures %.1f%%, tables %.1f%%\n", r.tool.c_str(), r.articles,
                  r.figures_pct, r.tables_pct);
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  int pages = 10;
  std::uint64_t seed = 1;
  int corpus = 0;
  int figure_parsable = 0;
  int table_parsable = 0;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  const fs::path out = g.at(a.out);
  const auto errors = run_items(static_cast<std::size_t>(std::max(0, a.pages)), g.cfg.jobs,
                                [&](std::size_t i) {
    const SynthPage sp = synth_page(a.seed + i);
    const std::string id = sp.page.source_id;
    write_file_atomic(out / "hocr" / (id + ".hocr"), to_hocr(sp.page));
    write_file_atomic(out / "truths" / (id + ".json"), dump(truths_to_json(sp.truths)));
    fs::create_directories(out / "images");
    const fs::path png = out / "images" / (id + ".png");
    fs::path tmp = png;
    tmp += ".tmp";
    write_png(tmp, sp.image);
    fs::rename(tmp, png);
  });
  std::size_t failed = 0;
  for (const auto& e : errors)
    if (e) {
      ++failed;
      std::cerr << "error: " << *e << '\n';
    }
  if (a.corpus > 0) {
    const auto articles =
        synth_parsability_corpus(a.corpus, a.figure_parsable, a.table_parsable, a.seed);
    std::string csv = "article_id,year,venue\n";
    for (const SynthArticle& art : articles) {
      write_file_atomic(out / "miner" / (art.article_id + ".json"), dump(art.miner_json));
      csv += art.article_id + "," + (art.year ? std::to_string(*art.year) : "") + ",synthetic\n";
    }
    write_file_atomic(out / "meta.csv", csv);
  }
  std::cout << "generated " << a.pages - static_cast<int>(failed) << " pages";
  if (a.corpus > 0) std::cout << " and " << a.corpus << " mined articles";
  std::cout << " under " << out.string() << '\n';
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"figcap: figure and caption localization for scanned pages"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--root", g.root, "Base directory for relative paths");
  app.add_option("--config", g.config_path, "Flat key = value settings file");
  app.add_option("--jobs,-j", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--trace", g.trace, "Write per-step snapshots from the pipeline");

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "hOCR files to canonical page JSON");
  s_ingest->add_option("--in", ingest.in, "Directory of hOCR files")->required();
  s_ingest->add_option("--out", ingest.out, "Output directory")->required();

  FeaturesArgs features;
  auto* s_features = app.add_subcommand("features", "Page JSON and images to FSTK stacks");
  s_features->add_option("--pages", features.pages)->required();
  s_features->add_option("--images", features.images)->required();
  s_features->add_option("--out", features.out)->required();
  s_features->add_option("--channels", features.channels, "m12, all, or comma-separated names");
  s_features->add_option("--tags", features.tags, "Directory of tag sidecars");

  RectsArgs rects;
  auto* s_rects = app.add_subcommand("rects", "Detect framed rectangles");
  s_rects->add_option("--pages", rects.pages)->required();
  s_rects->add_option("--images", rects.images)->required();
  s_rects->add_option("--out", rects.out)->required();

  PipelineArgs pipeline;
  auto* s_pipeline = app.add_subcommand("pipeline", "Post-process detections into figure/caption pairs");
  s_pipeline->add_option("--pages", pipeline.pages)->required();
  s_pipeline->add_option("--out", pipeline.out)->required();
  s_pipeline->add_option("--detections", pipeline.detections, "Model detections; omit for heuristic mode");
  s_pipeline->add_option("--mined", pipeline.mined, "Miner figure lists per page");
  s_pipeline->add_option("--rects", pipeline.rects, "Rectangle candidates from 'rects'");
  s_pipeline->add_option("--images", pipeline.images, "Page images; rectangles are detected when --rects is absent");
  s_pipeline->add_option("--last-step", pipeline.last_step, "Stop after this step (1-10)");

  EvalArgs eval;
  auto* s_eval = app.add_subcommand("eval", "Score results against ground truth");
  s_eval->add_option("--results", eval.results)->required();
  s_eval->add_option("--truths", eval.truths)->required();
  s_eval->add_option("--out", eval.out)->required();
  s_eval->add_option("--pages", eval.pages, "Page JSON, needed for normalized truth files");
  s_eval->add_option("--meta", eval.meta, "article_id,year,venue CSV");
  s_eval->add_option("--thresholds", eval.thresholds, "Comma-separated IOU thresholds");
  s_eval->add_flag("--cutoff-analysis", eval.cutoff_analysis, "Derive the IOU cutoff from area cuts");
  s_eval->add_option("--cutoff-mode", eval.cutoff_mode, "percentile or threshold");

  ParsabilityArgs pars;
  auto* s_pars = app.add_subcommand("parsability", "Per-decade parsability of mined labels");
  s_pars->add_option("--miner", pars.miners, "tool=dir, repeatable")->required();
  s_pars->add_option("--meta", pars.meta, "article_id,year,venue CSV");
  s_pars->add_option("--out", pars.out, "Output CSV")->required();

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate synthetic pages and a mined corpus");
  s_synth->add_option("--out", synth.out)->required();
  s_synth->add_option("--pages", synth.pages)->check(CLI::NonNegativeNumber);
  s_synth->add_option("--seed", synth.seed);
  s_synth->add_option("--corpus", synth.corpus, "Number of mined articles")->check(CLI::NonNegativeNumber);
  s_synth->add_option("--figure-parsable", synth.figure_parsable);
  s_synth->add_option("--table-parsable", synth.table_parsable);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!g.config_path.empty()) apply_config(g.cfg, parse_key_values(read_file(g.at(g.config_path))));
    if (g.jobs) g.cfg.jobs = *g.jobs;
    if (g.trace) g.cfg.trace = true;
    validate(g.cfg);

    if (*s_ingest) return cmd_ingest(g, ingest);
    if (*s_features) return cmd_features(g, features);
    if (*s_rects) return cmd_rects(g, rects);
    if (*s_pipeline) return cmd_pipeline(g, pipeline);
    if (*s_eval) return cmd_eval(g, eval);
    if (*s_pars) return cmd_parsability(g, pars);
    if (*s_synth) return cmd_synth(g, synth);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
