#include "figcap/synth.hpp"

#include "figcap/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace figcap {

namespace {

using Rng = std::mt19937_64;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

const std::vector<std::string> kRawVocabulary = {
    "lorem",    "ipsum",     "dolor",     "sit",      "amet",      "consectetur", "adipiscing",
    "elit",     "sed",       "do",        "eiusmod",  "tempor",    "incididunt",  "ut",
    "labore",   "et",        "dolore",    "magna",    "aliqua",    "enim",        "ad",
    "minim",    "veniam",    "quis",      "nostrud",  "exercitation", "ullamco",  "laboris",
    "nisi",     "aliquip",   "ex",        "ea",       "commodo",   "consequat",   "duis",
    "aute",     "irure",     "in",        "reprehenderit", "voluptate", "velit",  "esse",
    "cillum",   "eu",        "fugiat",    "nulla",    "pariatur",  "excepteur",   "sint",
    "occaecat", "cupidatat", "non",       "proident", "sunt",      "culpa",       "qui",
    "officia",  "deserunt",  "mollit",    "anim",     "id",        "est",         "laborum",
    "spectra",  "stellar",   "orbit",     "nebula",   "observed",  "radial",      "velocity",
    "the",      "of",        "and",       "we",       "with",      "from",        "this",
    "1932",     "0.45",      "(see",      "below).",  "mass,",     "period;",     "Table"};

struct Writer {
  Page& page;
  GrayImage& img;
  Rng& rng;
  int h;

  int char_width() const { return std::max(3, static_cast<int>(std::lround(0.55 * h))); }
  int word_width(const std::string& s) const { return static_cast<int>(s.size()) * char_width(); }
  int space() const { return std::max(3, static_cast<int>(std::lround(0.45 * h))); }

  void put(const std::string& text, int x, int y) {
    const int w = word_width(text);
    Word word;
    word.box = {static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + w),
                static_cast<double>(y + h)};
    word.text = text;
    word.confidence = uniform(rng, 70, 99);
    word.fontsize = h * 0.75;
    word.ascenders = std::round(h * 0.25);
    word.descenders = std::round(h * 0.2);
    page.words.push_back(word);
    const int cw = char_width();
    for (std::size_t i = 0; i < text.size(); ++i) {
      const int gx = x + static_cast<int>(i) * cw;
      const int top = y + (std::isupper(static_cast<unsigned char>(text[i])) ? 0 : h / 4);
      const int bottom = y + h - (text[i] == 'p' || text[i] == 'q' || text[i] == 'g' ? 0 : h / 5);
      img.block(top, gx, bottom - top, cw - 1).setConstant(static_cast<std::uint8_t>(uniform(rng, 10, 50)));
    }
  }

  /// Lays words left to right inside [x0, x1); returns the bottom of the last line.
  int flow(const std::vector<std::string>& words, int x0, int x1, int y, int line_pitch,
           int max_lines) {
    int x = x0, lines = 1;
    for (const std::string& wd : words) {
      const int w = word_width(wd);
      if (x > x0 && x + w > x1) {
        if (lines == max_lines) break;
        ++lines;
        x = x0;
        y += line_pitch;
      }
      put(wd, x, y);
      x += w + space();
    }
    return y + h;
  }
};

void draw_disc(GrayImage& img, double cx, double cy, double r, std::uint8_t v) {
  const int x0 = static_cast<int>(std::floor(cx - r)), x1 = static_cast<int>(std::ceil(cx + r));
  const int y0 = static_cast<int>(std::floor(cy - r)), y1 = static_cast<int>(std::ceil(cy + r));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r && y >= 0 && x >= 0 &&
          y < img.rows() && x < img.cols())
        img(y, x) = v;
}

std::vector<std::string> filler(Rng& rng, int n) {
  const auto& vocab = filler_words();
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back(vocab[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(vocab.size()) - 1))]);
  return out;
}

struct FigurePlan {
  int frame_h = 0;
  int frame_w = 0;
  int caption_lines = 1;
};

}  // namespace

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = [] {
    const std::vector<std::string> keywords{"Fig.", "Figure", "Plate"};
    std::vector<std::string> out;
    for (const std::string& w : kRawVocabulary)
      if (!fuzzy_keyword_match(w, keywords, 1)) out.push_back(w);
    return out;
  }();
  return words;
}

SynthPage synth_page(std::uint64_t seed, const SynthParams& p) {
  Rng rng(seed);
  SynthPage out;
  out.page.source_id = "synth_" + std::to_string(seed);
  out.page.width_px = p.width;
  out.page.height_px = p.height;
  out.image = GrayImage::Constant(p.height, p.width, 255);
  Writer wr{out.page, out.image, rng, p.word_height};

  const int h = p.word_height;
  const int pitch = static_cast<int>(std::lround(1.5 * h));
  const int block_gap = 3 * h;
  const int left = p.margin, right = p.width - p.margin;
  const int text_w = right - left;
  const int usable = p.height - 2 * p.margin;

  const int nfig = uniform(rng, p.min_figures, p.max_figures);
  std::vector<FigurePlan> plans(static_cast<std::size_t>(nfig));
  int fig_total = 0;
  for (FigurePlan& f : plans) {
    f.frame_h = nfig == 1 ? uniform(rng, 260, 440) : uniform(rng, 180, 300);
    f.frame_w = uniform(rng, text_w / 2, text_w * 9 / 10);
    f.caption_lines = uniform(rng, 1, 3);
    fig_total += f.frame_h + pitch * f.caption_lines + h + block_gap;
  }
  // Text lines available for the paragraphs before, between and after figures.
  const int spare = usable - fig_total - block_gap * nfig;
  int lines_left = std::max(0, spare / pitch);
  std::vector<int> para_lines(static_cast<std::size_t>(nfig) + 1, 0);
  for (std::size_t i = 0; i < para_lines.size(); ++i) {
    const bool last = i + 1 == para_lines.size();
    para_lines[i] = last ? lines_left : uniform(rng, 0, std::min(lines_left, 12));
    lines_left -= para_lines[i];
  }

  int y = p.margin;
  auto paragraph = [&](int lines) {
    if (lines <= 0) return;
    const int bottom = wr.flow(filler(rng, lines * 14), left, right, y, pitch, lines);
    out.page.regions.push_back({{static_cast<double>(left), static_cast<double>(y),
                                 static_cast<double>(right), static_cast<double>(bottom)},
                                RegionKind::paragraph});
    y = bottom + block_gap;
  };

  for (int fi = 0; fi < nfig; ++fi) {
    paragraph(para_lines[static_cast<std::size_t>(fi)]);
    const FigurePlan& f = plans[static_cast<std::size_t>(fi)];
    const int fx0 = left + uniform(rng, 0, text_w - f.frame_w);
    const int fx1 = fx0 + f.frame_w, fy0 = y, fy1 = y + f.frame_h;
    const int t = p.frame_thickness;
    out.image.block(fy0, fx0, t, f.frame_w).setZero();
    out.image.block(fy1 - t, fx0, t, f.frame_w).setZero();
    out.image.block(fy0, fx0, f.frame_h, t).setZero();
    out.image.block(fy0, fx1 - t, f.frame_h, t).setZero();

    // Plot: L-shaped axes, a sine curve, and tick labels as words. Nothing
    // touches the frame and labels sit at least 2 word heights above its bottom.
    const int pad = 12;
    const int ax0 = fx0 + pad + 4 * wr.char_width();
    const int ay1 = fy1 - 2 * h - pad - h;
    const int ax1 = fx1 - pad;
    const int ay0 = fy0 + pad;
    out.image.block(ay0, ax0, ay1 - ay0, 2).setConstant(20);
    out.image.block(ay1 - 2, ax0, 2, ax1 - ax0).setConstant(20);
    const double periods = uniform_real(rng, 1.5, 3.0);
    const double phase = uniform_real(rng, 0, 2 * std::numbers::pi);
    const double amp = 0.3 * (ay1 - ay0);
    const double mid = 0.5 * (ay0 + ay1);
    for (int x = ax0 + 8; x < ax1 - 4; ++x) {
      const double s = (x - ax0) / static_cast<double>(ax1 - ax0);
      draw_disc(out.image, x, mid + amp * std::sin(2 * std::numbers::pi * periods * s + phase),
                1.2, 40);
    }
    const int nticks = uniform(rng, 2, 4);
    for (int k = 0; k < nticks; ++k) {
      const std::string label = std::to_string(uniform(rng, 0, 99));
      const int lx = ax0 + 6 + k * (ax1 - ax0 - 40) / std::max(1, nticks - 1);
      wr.put(label, std::min(lx, ax1 - wr.word_width(label)), ay1 + 4);
    }
    wr.put(std::to_string(uniform(rng, 1, 9)), fx0 + pad, ay0 + 4);

    // Caption, centred on the frame, sometimes wider than it.
    const int cap_w = std::clamp(static_cast<int>(f.frame_w * uniform_real(rng, 0.6, 1.2)),
                                 text_w / 3, text_w);
    const int cap_x0 = std::clamp((fx0 + fx1) / 2 - cap_w / 2, left, right - cap_w);
    const int cap_y0 = fy1 + static_cast<int>(std::lround(1.5 * h));
    const std::size_t first_word = out.page.words.size();
    std::vector<std::string> words{"Figure", std::to_string(fi + 1) + "."};
    for (const std::string& w : filler(rng, 40)) words.push_back(w);
    const int cap_bottom = wr.flow(words, cap_x0, cap_x0 + cap_w, cap_y0, pitch, f.caption_lines);
    BoxD cap = out.page.words[first_word].box;
    for (std::size_t i = first_word; i < out.page.words.size(); ++i)
      cap = expand_to_include(cap, out.page.words[i].box);

    const BoxD frame{static_cast<double>(fx0), static_cast<double>(fy0), static_cast<double>(fx1),
                     static_cast<double>(fy1)};
    const BoxD fig{std::min(frame.x0, cap.x0), frame.y0, std::max(frame.x1, cap.x1), cap.y0};
    out.frames.push_back(frame);
    out.captions.push_back(cap);
    out.truths.push_back({fig, DetClass::figure});
    out.truths.push_back({cap, DetClass::figure_caption});
    y = cap_bottom + block_gap;
  }
  paragraph(std::min(para_lines.back(), (p.height - p.margin - y) / pitch));
  return out;
}

std::vector<SynthArticle> synth_parsability_corpus(int count, int figure_parsable,
                                                   int table_parsable, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<char> fig_ok(static_cast<std::size_t>(count), 0), tab_ok(fig_ok);
  std::fill_n(fig_ok.begin(), std::clamp(figure_parsable, 0, count), 1);
  std::fill_n(tab_ok.begin(), std::clamp(table_parsable, 0, count), 1);
  std::shuffle(fig_ok.begin(), fig_ok.end(), rng);
  std::shuffle(tab_ok.begin(), tab_ok.end(), rng);

  auto to_roman = [](int n) {
    static const std::pair<int, const char*> table[] = {
        {1000, "M"}, {900, "CM"}, {500, "D"}, {400, "CD"}, {100, "C"}, {90, "XC"}, {50, "L"},
        {40, "XL"},  {10, "X"},   {9, "IX"},  {5, "V"},    {4, "IV"},  {1, "I"}};
    std::string s;
    for (const auto& [v, sym] : table)
      while (n >= v) {
        s += sym;
        n -= v;
      }
    return s;
  };

  // Labels for one kind; `ok` decides whether they form 1..N.
  auto labels = [&](bool ok, int max_n) {
    const bool roman = uniform(rng, 0, 3) == 0;
    auto name = [&](int k) { return roman ? to_roman(k) : std::to_string(k); };
    std::vector<std::string> out;
    int n = uniform(rng, 1, max_n);
    if (ok) {
      for (int k = 1; k <= n; ++k) out.push_back(name(k));
    } else {
      switch (uniform(rng, 0, 4)) {
        case 0: {  // gap
          const int skip = uniform(rng, 1, n);
          for (int k = 1; k <= n + 1; ++k)
            if (k != skip) out.push_back(name(k));
          break;
        }
        case 1:  // duplicate
          for (int k = 1; k <= n; ++k) out.push_back(name(k));
          out.push_back(name(uniform(rng, 1, n)));
          break;
        case 2:  // sub-figure label
          for (int k = 1; k <= n; ++k) out.push_back(name(k));
          out.push_back(std::to_string(n + 1) + "a");
          break;
        case 3:  // mixed numbering
          n = std::max(n, 2);
          for (int k = 1; k <= n; ++k) out.push_back(k % 2 ? std::to_string(k) : to_roman(k));
          break;
        default:  // nothing mined
          break;
      }
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  };

  std::vector<SynthArticle> out;
  for (int i = 0; i < count; ++i) {
    SynthArticle a;
    a.article_id = "article_" + std::to_string(i);
    a.figures_parsable = fig_ok[static_cast<std::size_t>(i)];
    a.tables_parsable = tab_ok[static_cast<std::size_t>(i)];
    if (uniform(rng, 0, 19) != 0) a.year = uniform(rng, 1870, 1999);
    auto figs = nlohmann::ordered_json::array();
    auto add = [&](const std::string& type, const std::string& name) {
      const double x = uniform(rng, 50, 300), yy = uniform(rng, 50, 500);
      nlohmann::ordered_json e;
      e["name"] = name;
      e["figType"] = type;
      e["page"] = uniform(rng, 0, 12);
      e["regionBoundary"] = {{"x1", x}, {"y1", yy}, {"x2", x + 200}, {"y2", yy + 150}};
      e["captionBoundary"] = {{"x1", x}, {"y1", yy + 160}, {"x2", x + 200}, {"y2", yy + 190}};
      figs.push_back(std::move(e));
    };
    for (const std::string& l : labels(a.figures_parsable, 9)) add("Figure", l);
    for (const std::string& l : labels(a.tables_parsable, 5)) add("Table", l);
    a.miner_json = {{"figures", std::move(figs)}};
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace figcap
