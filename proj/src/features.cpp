#include "figcap/features.hpp"

#include "figcap/error.hpp"
#include "figcap/text.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace figcap {

namespace {

constexpr std::array<std::string_view, kChannelCount> kNames = {
    "gs",    "fs",     "asc",    "dec",    "wc",  "pct_num", "pct_let",
    "punct", "t_ang",  "sp_pos", "sp_tag", "sp_dep", "p_b",  "c_b"};

constexpr std::array<std::string_view, kPosCardinality> kPos = {
    "ADJ",  "ADP",   "ADV",  "AUX",   "CONJ", "CCONJ", "DET",
    "INTJ", "NOUN",  "NUM",  "PART",  "PRON", "PROPN", "PUNCT",
    "SCONJ", "SYM",  "VERB", "X",     "SPACE"};

constexpr int kPosNoun = 8;
constexpr int kPosNum = 9;
constexpr int kPosOther = 17;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::uint8_t signed_byte(double v) {
  const double c = std::clamp(v, -5.0, 5.0);
  return static_cast<std::uint8_t>(std::lround(128.0 + 127.0 * c / 5.0));
}

std::uint8_t fraction_byte(double frac) {
  return static_cast<std::uint8_t>(std::lround(125.0 + 130.0 * frac));
}

// Half-open pixel span of [lo, hi) scaled into [0, n), never empty.
std::pair<int, int> scaled_span(double lo, double hi, double scale, int n) {
  int a = static_cast<int>(std::lround(lo * scale));
  int b = static_cast<int>(std::lround(hi * scale));
  a = std::clamp(a, 0, n - 1);
  b = std::clamp(b, 0, n);
  if (b <= a) b = a + 1;
  return {a, b};
}

void fill_max(Plane& plane, const BoxD& box, double sx, double sy, std::uint8_t v) {
  if (v == 0) return;
  const auto [c0, c1] = scaled_span(box.x0, box.x1, sx, kStackSize);
  const auto [r0, r1] = scaled_span(box.y0, box.y1, sy, kStackSize);
  auto block = plane.block(r0, c0, r1 - r0, c1 - c0);
  block = block.cwiseMax(v);
}

// Row weights for averaging n input samples into m output samples.
Eigen::SparseMatrix<float, Eigen::RowMajor> area_weights(int m, int n) {
  std::vector<Eigen::Triplet<float>> trip;
  const double step = static_cast<double>(n) / m;
  for (int i = 0; i < m; ++i) {
    const double lo = i * step;
    const double hi = (i + 1) * step;
    for (int k = static_cast<int>(std::floor(lo)); k < n && k < hi; ++k) {
      const double overlap = std::min<double>(hi, k + 1) - std::max<double>(lo, k);
      if (overlap > 0) trip.emplace_back(i, k, static_cast<float>(overlap / step));
    }
  }
  Eigen::SparseMatrix<float, Eigen::RowMajor> w(m, n);
  w.setFromTriplets(trip.begin(), trip.end());
  return w;
}

}  // namespace

std::vector<ChannelId> m12_channels() {
  return {ChannelId::gs,      ChannelId::asc,     ChannelId::dec,
          ChannelId::wc,      ChannelId::pct_num, ChannelId::pct_let,
          ChannelId::punct,   ChannelId::t_ang,   ChannelId::sp_pos};
}

std::string_view channel_name(ChannelId id) {
  return kNames[static_cast<std::size_t>(id)];
}

std::optional<ChannelId> channel_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kChannelCount; ++i)
    if (kNames[i] == name) return static_cast<ChannelId>(i);
  return std::nullopt;
}

std::vector<ChannelId> parse_channel_set(std::string_view spec) {
  if (spec == "m12") return m12_channels();
  if (spec == "all") return {kAllChannels.begin(), kAllChannels.end()};
  std::array<bool, kChannelCount> wanted{};
  std::size_t pos = 0;
  bool any = false;
  while (pos <= spec.size()) {
    std::size_t end = spec.find(',', pos);
    if (end == std::string_view::npos) end = spec.size();
    std::string_view tok = spec.substr(pos, end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (!tok.empty()) {
      auto id = channel_from_name(tok);
      if (!id) throw UsageError("unknown channel: " + std::string(tok));
      wanted[static_cast<std::size_t>(*id)] = true;
      any = true;
    }
    pos = end + 1;
  }
  if (!any) throw UsageError("empty channel set");
  std::vector<ChannelId> out;
  for (std::size_t i = 0; i < kChannelCount; ++i)
    if (wanted[i]) out.push_back(static_cast<ChannelId>(i));
  return out;
}

const Plane* FeatureStack::find(ChannelId id) const {
  for (const auto& c : channels)
    if (c.id == id) return &c.plane;
  return nullptr;
}

std::vector<std::uint8_t> normalize_fontsize(const Page& page) {
  std::vector<double> fs;
  fs.reserve(page.words.size());
  for (const Word& w : page.words) fs.push_back(w.fontsize);
  std::vector<std::uint8_t> out(fs.size(), 128);
  if (fs.empty()) return out;
  const double med = median(fs);
  const double mean = std::accumulate(fs.begin(), fs.end(), 0.0) / static_cast<double>(fs.size());
  double var = 0;
  for (double v : fs) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(fs.size()));
  if (sd == 0) return out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double z = (fs[i] - med) / sd;
    out[i] = std::abs(z) > 5.0 ? std::uint8_t{0} : signed_byte(z);
  }
  return out;
}

std::vector<std::uint8_t> normalize_typo(const Page& page, TypoMetric which) {
  std::vector<double> v;
  v.reserve(page.words.size());
  for (const Word& w : page.words)
    v.push_back(which == TypoMetric::ascenders ? w.ascenders : w.descenders);
  const double med = median(v);
  std::vector<std::uint8_t> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(signed_byte(x - med));
  return out;
}

CharClassBytes char_class_channels(const Word& word) {
  const std::u32string cps = text::decode_utf8(word.text);
  if (cps.empty()) return {};
  std::size_t letters = 0, digits = 0;
  bool punct = false;
  for (char32_t c : cps) {
    if (text::is_letter(c)) ++letters;
    else if (text::is_digit(c)) ++digits;
    if (text::is_punct(c)) punct = true;
  }
  const double n = static_cast<double>(cps.size());
  return {fraction_byte(static_cast<double>(letters) / n),
          fraction_byte(static_cast<double>(digits) / n),
          static_cast<std::uint8_t>(punct ? 250 : 125)};
}

std::uint8_t rotation_channel(int rotation_deg) {
  switch (snap_rotation(rotation_deg)) {
    case 0: return 85;
    case 90:
    case 180: return 170;
    default: return 255;
  }
}

std::uint8_t confidence_channel(const Word& word) {
  const double c = std::clamp(word.confidence, 0.0, 100.0);
  return static_cast<std::uint8_t>(1 + std::lround(254.0 * c / 100.0));
}

std::span<const std::string_view> pos_inventory() { return kPos; }

TagProvider fallback_tag_provider() {
  return [](std::span<const Word> words) {
    std::vector<WordTags> tags;
    tags.reserve(words.size());
    for (const Word& w : words) {
      std::size_t letters = 0, digits = 0;
      for (char32_t c : text::decode_utf8(w.text)) {
        if (text::is_letter(c)) ++letters;
        else if (text::is_digit(c)) ++digits;
      }
      if (digits > 0 && digits >= letters) tags.push_back({kPosNum, 1, 1});
      else if (letters > 0) tags.push_back({kPosNoun, 0, 0});
      else tags.push_back({kPosOther, 2, 2});
    }
    return tags;
  };
}

TagProvider sidecar_tag_provider(std::vector<WordTags> tags) {
  return [tags = std::move(tags)](std::span<const Word> words) {
    if (tags.size() != words.size())
      throw SchemaError("tag sidecar has " + std::to_string(tags.size()) +
                        " entries for " + std::to_string(words.size()) + " words");
    return tags;
  };
}

std::vector<WordTags> parse_tag_sidecar(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("tag sidecar must be a JSON array");
  std::vector<WordTags> out;
  out.reserve(j.size());
  try {
    for (const auto& e : j)
      out.push_back({e.at("pos").get<int>(), e.at("tag").get<int>(), e.at("dep").get<int>()});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("tag sidecar: ") + e.what());
  }
  return out;
}

std::uint8_t category_byte(int id, int cardinality) {
  if (id < 0 || id >= cardinality)
    throw ProviderCardinalityViolation("tag id " + std::to_string(id) +
                                       " outside cardinality " + std::to_string(cardinality));
  return static_cast<std::uint8_t>(std::lround(255.0 * (id + 1) / cardinality));
}

std::vector<LinguisticBytes> linguistic_channels(const Page& page,
                                                 const TagProvider& provider) {
  const TagProvider& p = provider ? provider : fallback_tag_provider();
  const std::vector<WordTags> tags = p(page.words);
  if (tags.size() != page.words.size())
    throw SchemaError("tag provider returned the wrong number of entries");
  std::vector<LinguisticBytes> out;
  out.reserve(tags.size());
  for (const WordTags& t : tags)
    out.push_back({category_byte(t.pos, kPosCardinality),
                   category_byte(t.tag, kTagCardinality),
                   category_byte(t.dep, kDepCardinality)});
  return out;
}

FloatImage downsample_area(const GrayImage& img, int rows, int cols) {
  const auto wr = area_weights(rows, static_cast<int>(img.rows()));
  const auto wc = area_weights(cols, static_cast<int>(img.cols()));
  const FloatImage src = img.cast<float>();
  const FloatImage tmp = wr * src;
  return tmp * wc.transpose();
}

FeatureStack rasterize(const Page& page, const GrayImage& grayscale,
                       std::span<const ChannelId> channels,
                       const TagProvider& provider, RasterDiagnostics* diagnostics) {
  if (grayscale.cols() != page.width_px || grayscale.rows() != page.height_px)
    throw DimensionMismatch("image is " + std::to_string(grayscale.cols()) + "x" +
                            std::to_string(grayscale.rows()) + ", page is " +
                            std::to_string(page.width_px) + "x" +
                            std::to_string(page.height_px));
  const double sx = static_cast<double>(kStackSize) / page.width_px;
  const double sy = static_cast<double>(kStackSize) / page.height_px;
  const std::size_t nw = page.words.size();

  auto wants = [&](ChannelId id) {
    return std::find(channels.begin(), channels.end(), id) != channels.end();
  };

  std::vector<std::uint8_t> fs, asc, dec;
  if (wants(ChannelId::fs)) fs = normalize_fontsize(page);
  if (wants(ChannelId::asc)) asc = normalize_typo(page, TypoMetric::ascenders);
  if (wants(ChannelId::dec)) dec = normalize_typo(page, TypoMetric::descenders);
  std::vector<LinguisticBytes> ling;
  if (wants(ChannelId::sp_pos) || wants(ChannelId::sp_tag) || wants(ChannelId::sp_dep))
    ling = linguistic_channels(page, provider);
  std::vector<CharClassBytes> cc(nw);
  for (std::size_t i = 0; i < nw; ++i) cc[i] = char_class_channels(page.words[i]);

  if (diagnostics) {
    diagnostics->rotation90_words = static_cast<int>(std::count_if(
        page.words.begin(), page.words.end(),
        [](const Word& w) { return snap_rotation(w.rotation_deg) == 90; }));
  }

  FeatureStack stack;
  stack.source_id = page.source_id;
  for (ChannelId id : channels) {
    if (std::any_of(stack.channels.begin(), stack.channels.end(),
                    [id](const FeatureChannel& c) { return c.id == id; }))
      continue;
    Plane plane = Plane::Zero(kStackSize, kStackSize);
    if (id == ChannelId::gs) {
      const FloatImage small = downsample_area(grayscale, kStackSize, kStackSize);
      plane = small.unaryExpr([](float v) {
        const long r = std::lround(std::clamp(v, 0.0f, 255.0f));
        return static_cast<std::uint8_t>(255 - r);
      });
    } else if (id == ChannelId::p_b || id == ChannelId::c_b) {
      const RegionKind kind = id == ChannelId::p_b ? RegionKind::paragraph : RegionKind::carea;
      for (const Region& r : page.regions)
        if (r.kind == kind) fill_max(plane, r.box, sx, sy, 255);
    } else {
      for (std::size_t i = 0; i < nw; ++i) {
        const Word& w = page.words[i];
        std::uint8_t v = 0;
        switch (id) {
          case ChannelId::fs: v = fs[i]; break;
          case ChannelId::asc: v = asc[i]; break;
          case ChannelId::dec: v = dec[i]; break;
          case ChannelId::wc: v = confidence_channel(w); break;
          case ChannelId::pct_num: v = cc[i].pct_num; break;
          case ChannelId::pct_let: v = cc[i].pct_let; break;
          case ChannelId::punct: v = cc[i].punct; break;
          case ChannelId::t_ang: v = rotation_channel(w); break;
          case ChannelId::sp_pos: v = ling[i].pos; break;
          case ChannelId::sp_tag: v = ling[i].tag; break;
          case ChannelId::sp_dep: v = ling[i].dep; break;
          default: break;
        }
        fill_max(plane, w.box, sx, sy, v);
      }
    }
    stack.channels.push_back({id, std::move(plane)});
  }
  return stack;
}

namespace {
constexpr char kMagic[5] = {'F', 'S', 'T', 'K', '1'};
constexpr std::size_t kNameBytes = 16;
}  // namespace

void write_fstk(std::ostream& out, const FeatureStack& stack) {
  out.write(kMagic, sizeof kMagic);
  const auto n = static_cast<std::uint16_t>(stack.channels.size());
  const char count[2] = {static_cast<char>(n & 0xFF), static_cast<char>(n >> 8)};
  out.write(count, 2);
  for (const auto& c : stack.channels) {
    const char id = static_cast<char>(c.id);
    out.write(&id, 1);
    std::array<char, kNameBytes> name{};
    const std::string_view nm = channel_name(c.id);
    std::memcpy(name.data(), nm.data(), std::min(nm.size(), kNameBytes));
    out.write(name.data(), kNameBytes);
  }
  for (const auto& c : stack.channels) {
    if (c.plane.rows() != kStackSize || c.plane.cols() != kStackSize)
      throw DimensionMismatch("stack planes must be 512x512");
    out.write(reinterpret_cast<const char*>(c.plane.data()),
              static_cast<std::streamsize>(c.plane.size()));
  }
  if (!out) throw IoError("failed writing FSTK stream");
}

FeatureStack read_fstk(std::istream& in) {
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0)
    throw SchemaError("not an FSTK1 stream");
  unsigned char count[2];
  if (!in.read(reinterpret_cast<char*>(count), 2)) throw SchemaError("truncated FSTK header");
  const int n = count[0] | (count[1] << 8);
  FeatureStack stack;
  for (int i = 0; i < n; ++i) {
    char id = 0;
    std::array<char, kNameBytes> name{};
    if (!in.read(&id, 1) || !in.read(name.data(), kNameBytes))
      throw SchemaError("truncated FSTK manifest");
    const auto uid = static_cast<unsigned char>(id);
    if (uid >= kChannelCount) throw SchemaError("unknown channel id in FSTK manifest");
    stack.channels.push_back({static_cast<ChannelId>(uid), Plane()});
  }
  for (auto& c : stack.channels) {
    c.plane.resize(kStackSize, kStackSize);
    in.read(reinterpret_cast<char*>(c.plane.data()), static_cast<std::streamsize>(c.plane.size()));
    if (in.gcount() != static_cast<std::streamsize>(c.plane.size()))
      throw SchemaError("truncated FSTK plane");
  }
  return stack;
}

}  // namespace figcap
