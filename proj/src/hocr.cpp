#include "figcap/hocr.hpp"

#include "figcap/error.hpp"

#include <expat.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace figcap {

namespace {

using Props = std::map<std::string, std::vector<std::string>, std::less<>>;

// "bbox 1 2 3 4; x_wconf 93; image \"a b.png\"" -> {bbox:[1,2,3,4], ...}
Props parse_title(std::string_view title) {
  Props props;
  std::size_t pos = 0;
  while (pos <= title.size()) {
    std::size_t end = title.find(';', pos);
    if (end == std::string_view::npos) end = title.size();
    std::string_view item = title.substr(pos, end - pos);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < item.size()) {
      while (i < item.size() && std::isspace(static_cast<unsigned char>(item[i]))) ++i;
      if (i >= item.size()) break;
      std::string tok;
      if (item[i] == '"') {
        ++i;
        while (i < item.size() && item[i] != '"') tok.push_back(item[i++]);
        ++i;
      } else {
        while (i < item.size() && !std::isspace(static_cast<unsigned char>(item[i])))
          tok.push_back(item[i++]);
      }
      tokens.push_back(std::move(tok));
    }
    if (!tokens.empty()) {
      std::string name = tokens.front();
      tokens.erase(tokens.begin());
      props.emplace(std::move(name), std::move(tokens));
    }
    pos = end + 1;
  }
  return props;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> prop_number(const Props& p, std::string_view name) {
  auto it = p.find(name);
  if (it == p.end() || it->second.empty()) return std::nullopt;
  return to_double(it->second.front());
}

std::optional<BoxD> prop_bbox(const Props& p) {
  auto it = p.find("bbox");
  if (it == p.end() || it->second.size() != 4) return std::nullopt;
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    auto d = to_double(it->second[i]);
    if (!d) return std::nullopt;
    v[i] = *d;
  }
  return BoxD{v[0], v[1], v[2], v[3]};
}

bool has_class(std::string_view classes, std::string_view name) {
  std::size_t pos = 0;
  while (pos < classes.size()) {
    while (pos < classes.size() && std::isspace(static_cast<unsigned char>(classes[pos]))) ++pos;
    std::size_t end = pos;
    while (end < classes.size() && !std::isspace(static_cast<unsigned char>(classes[end]))) ++end;
    if (classes.substr(pos, end - pos) == name) return true;
    pos = end;
  }
  return false;
}

enum class Role { other, page, carea, par, word };

struct Frame {
  Role role = Role::other;
  Props props;
};

struct Parser {
  HocrOptions opts;
  std::vector<Frame> stack;
  ParsedPage out;
  bool have_page = false;
  bool page_closed = false;
  std::optional<int> page_angle;
  int word_depth = -1;  // stack index of the open ocrx_word
  std::string word_text;

  std::optional<double> inherited(std::string_view name) const {
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      if (auto v = prop_number(it->props, name)) return v;
    }
    return std::nullopt;
  }

  void start(const char* /*name*/, const char** atts) {
    Frame f;
    std::string_view cls, title;
    for (int i = 0; atts[i]; i += 2) {
      std::string_view key = atts[i];
      if (key == "class") cls = atts[i + 1];
      if (key == "title") title = atts[i + 1];
    }
    if (!title.empty()) f.props = parse_title(title);
    const bool in_page = have_page && !page_closed;
    if (has_class(cls, "ocr_page")) {
      if (!have_page) {
        f.role = Role::page;
        begin_page(f.props);
      }
    } else if (in_page && has_class(cls, "ocrx_word")) {
      f.role = Role::word;
    } else if (in_page && has_class(cls, "ocr_par")) {
      f.role = Role::par;
    } else if (in_page && has_class(cls, "ocr_carea")) {
      f.role = Role::carea;
    }
    stack.push_back(std::move(f));
    if (stack.back().role == Role::word && word_depth < 0) {
      word_depth = static_cast<int>(stack.size()) - 1;
      word_text.clear();
    }
  }

  void begin_page(const Props& props) {
    auto bbox = prop_bbox(props);
    if (!bbox || bbox->x1 <= 0 || bbox->y1 <= 0)
      throw MalformedDocument("ocr_page without a usable bbox");
    have_page = true;
    out.page.source_id = opts.source_id;
    out.page.dpi_effective = opts.dpi_effective;
    out.page.width_px = static_cast<int>(std::llround(bbox->x1));
    out.page.height_px = static_cast<int>(std::llround(bbox->y1));
    if (auto a = prop_number(props, "textangle")) page_angle = snap_rotation(*a);
  }

  std::optional<BoxD> clamp_box(const BoxD& b) const {
    BoxD c = clamp_to(b, static_cast<double>(out.page.width_px),
                      static_cast<double>(out.page.height_px));
    if (!c.valid()) return std::nullopt;
    return c;
  }

  void end(const char* /*name*/) {
    if (stack.empty()) return;
    const int depth = static_cast<int>(stack.size()) - 1;
    Frame& f = stack.back();
    switch (f.role) {
      case Role::page:
        page_closed = true;
        break;
      case Role::par:
      case Role::carea:
        if (auto b = prop_bbox(f.props)) {
          if (auto c = clamp_box(*b))
            out.page.regions.push_back(
                {*c, f.role == Role::par ? RegionKind::paragraph : RegionKind::carea});
        }
        break;
      case Role::word:
        if (depth == word_depth) finish_word(f);
        break;
      case Role::other:
        break;
    }
    if (depth == word_depth) word_depth = -1;
    stack.pop_back();
  }

  void finish_word(const Frame& f) {
    auto b = prop_bbox(f.props);
    std::optional<BoxD> c = b ? clamp_box(*b) : std::nullopt;
    if (!c) {
      ++out.diagnostics.dropped_words;
      return;
    }
    Word w;
    w.box = *c;
    auto first = word_text.find_first_not_of(" \t\r\n");
    auto last = word_text.find_last_not_of(" \t\r\n");
    w.text = first == std::string::npos ? std::string()
                                        : word_text.substr(first, last - first + 1);
    const std::size_t index = out.page.words.size();

    if (auto conf = prop_number(f.props, "x_wconf")) {
      if (*conf < 0 || *conf > 100) ++out.diagnostics.clamped_confidences;
      w.confidence = std::clamp(*conf, 0.0, 100.0);
    } else {
      out.diagnostics.missing_confidence.push_back(index);
    }

    auto size = inherited("x_size");
    if (!size) size = inherited("x_fsize");
    auto asc = inherited("x_ascenders");
    auto desc = inherited("x_descenders");
    if (!size || !asc || !desc) out.diagnostics.missing_metrics.push_back(index);
    w.fontsize = std::max(0.0, size.value_or(0.0));
    w.ascenders = asc.value_or(0.0);
    w.descenders = desc.value_or(0.0);
    w.rotation_deg = snap_rotation(inherited("textangle").value_or(0.0));
    out.page.words.push_back(std::move(w));
  }

  void text(const char* s, int len) {
    if (word_depth >= 0) word_text.append(s, static_cast<std::size_t>(len));
  }

  void finish() {
    if (!have_page) throw MissingPageElement("document has no ocr_page element");
    if (page_angle) {
      out.page.rotation_deg = *page_angle;
      return;
    }
    std::array<int, 4> votes{};
    for (const Word& w : out.page.words) ++votes[static_cast<std::size_t>(w.rotation_deg / 90)];
    auto best = std::max_element(votes.begin(), votes.end());
    out.page.rotation_deg = static_cast<int>(best - votes.begin()) * 90;
  }
};

// Exceptions must not unwind through expat's C frames.
struct Context {
  Parser* parser = nullptr;
  XML_Parser xml = nullptr;
  std::exception_ptr error;
};

void XMLCALL on_start(void* ud, const XML_Char* name, const XML_Char** atts) {
  auto* ctx = static_cast<Context*>(ud);
  if (ctx->error) return;
  try {
    ctx->parser->start(name, atts);
  } catch (...) {
    ctx->error = std::current_exception();
    XML_StopParser(ctx->xml, XML_FALSE);
  }
}
void XMLCALL on_end(void* ud, const XML_Char* name) {
  auto* ctx = static_cast<Context*>(ud);
  if (ctx->error) return;
  try {
    ctx->parser->end(name);
  } catch (...) {
    ctx->error = std::current_exception();
    XML_StopParser(ctx->xml, XML_FALSE);
  }
}
void XMLCALL on_text(void* ud, const XML_Char* s, int len) {
  static_cast<Context*>(ud)->parser->text(s, len);
}
void XMLCALL on_skipped(void* ud, const XML_Char* name, int is_param) {
  if (is_param) return;
  std::string_view n = name;
  if (n == "nbsp" || n == "ensp" || n == "emsp" || n == "thinsp")
    static_cast<Context*>(ud)->parser->text(" ", 1);
}

struct ExpatDeleter {
  void operator()(XML_Parser p) const { XML_ParserFree(p); }
};

ParsedPage run(Parser& parser, std::string_view doc) {
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, ExpatDeleter> xp(
      XML_ParserCreate("UTF-8"));
  if (!xp) throw MalformedDocument("cannot create XML parser");
  Context ctx{&parser, xp.get(), nullptr};
  XML_SetUserData(xp.get(), &ctx);
  XML_SetElementHandler(xp.get(), on_start, on_end);
  XML_SetCharacterDataHandler(xp.get(), on_text);
  XML_SetSkippedEntityHandler(xp.get(), on_skipped);
  // Parse in chunks so the size fits expat's int length argument.
  constexpr std::size_t chunk = 1 << 20;
  std::size_t pos = 0;
  do {
    const std::size_t n = std::min(chunk, doc.size() - pos);
    const bool final = pos + n == doc.size();
    const auto status =
        XML_Parse(xp.get(), doc.data() + pos, static_cast<int>(n), final);
    if (ctx.error) std::rethrow_exception(ctx.error);
    if (status == XML_STATUS_ERROR) {
      std::ostringstream msg;
      msg << "hOCR parse error at line " << XML_GetCurrentLineNumber(xp.get())
          << ": " << XML_ErrorString(XML_GetErrorCode(xp.get()));
      throw MalformedDocument(msg.str());
    }
    pos += n;
  } while (pos < doc.size());
  parser.finish();
  return std::move(parser.out);
}

std::string fmt_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string bbox_str(const BoxD& b) {
  return "bbox " + fmt_number(b.x0) + " " + fmt_number(b.y0) + " " +
         fmt_number(b.x1) + " " + fmt_number(b.y1);
}

}  // namespace

int snap_rotation(double degrees) {
  double d = std::fmod(degrees, 360.0);
  if (d < 0) d += 360.0;
  const int bin = static_cast<int>(std::lround(d / 90.0)) % 4;
  return bin * 90;
}

ParsedPage parse_hocr(std::string_view document, const HocrOptions& opts) {
  Parser parser;
  parser.opts = opts;
  return run(parser, document);
}

ParsedPage parse_hocr(std::istream& document, const HocrOptions& opts) {
  std::ostringstream buf;
  buf << document.rdbuf();
  return parse_hocr(std::string_view(buf.str()), opts);
}

BoxD snap_annotation_to_words(const BoxD& ann, const Page& page) {
  BoxD out = ann;
  for (const Word& w : page.words)
    if (center_inside(ann, w.box)) out = expand_to_include(out, w.box);
  return out;
}

std::string to_hocr(const Page& page) {
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       "<!DOCTYPE html PUBLIC \"-//W3C//DTD XHTML 1.0 Transitional//EN\"\n"
       "    \"http://www.w3.org/TR/xhtml1/DTD/xhtml1-transitional.dtd\">\n"
       "<html xmlns=\"http://www.w3.org/1999/xhtml\" xml:lang=\"en\" lang=\"en\">\n"
       " <head>\n  <title></title>\n"
       "  <meta http-equiv=\"Content-Type\" content=\"text/html;charset=utf-8\"/>\n"
       "  <meta name='ocr-system' content='figcap synth'/>\n"
       " </head>\n <body>\n";
  o << "  <div class='ocr_page' id='page_1' title='bbox 0 0 " << page.width_px
    << ' ' << page.height_px << "; textangle " << page.rotation_deg << "'>\n";
  int id = 0;
  for (const Region& r : page.regions) {
    ++id;
    if (r.kind == RegionKind::carea)
      o << "   <div class='ocr_carea' id='block_" << id << "' title='" << bbox_str(r.box)
        << "'></div>\n";
    else
      o << "   <p class='ocr_par' id='par_" << id << "' title='" << bbox_str(r.box)
        << "'></p>\n";
  }
  id = 0;
  for (const Word& w : page.words) {
    ++id;
    o << "   <span class='ocr_line' id='line_" << id << "' title='" << bbox_str(w.box)
      << "; textangle " << w.rotation_deg << "; x_size " << fmt_number(w.fontsize)
      << "; x_descenders " << fmt_number(w.descenders) << "; x_ascenders "
      << fmt_number(w.ascenders) << "'>\n"
      << "    <span class='ocrx_word' id='word_" << id << "' title='" << bbox_str(w.box)
      << "; x_wconf " << fmt_number(w.confidence) << "'>" << xml_escape(w.text)
      << "</span>\n   </span>\n";
  }
  o << "  </div>\n </body>\n</html>\n";
  return o.str();
}

const char* to_string(RegionKind kind) {
  return kind == RegionKind::carea ? "carea" : "paragraph";
}

namespace {
nlohmann::json bbox_json(const BoxD& b) { return {b.x0, b.y0, b.x1, b.y1}; }

BoxD bbox_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw SchemaError("bbox must be [x0,y0,x1,y1]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}
}  // namespace

nlohmann::ordered_json page_to_json(const Page& page) {
  nlohmann::ordered_json j;
  j["source_id"] = page.source_id;
  j["width_px"] = page.width_px;
  j["height_px"] = page.height_px;
  j["rotation_deg"] = page.rotation_deg;
  auto words = nlohmann::ordered_json::array();
  for (const Word& w : page.words) {
    nlohmann::ordered_json jw;
    jw["bbox"] = bbox_json(w.box);
    jw["text"] = w.text;
    jw["conf"] = w.confidence;
    jw["fontsize"] = w.fontsize;
    jw["asc"] = w.ascenders;
    jw["desc"] = w.descenders;
    jw["angle"] = w.rotation_deg;
    words.push_back(std::move(jw));
  }
  j["words"] = std::move(words);
  auto regions = nlohmann::ordered_json::array();
  for (const Region& r : page.regions) {
    nlohmann::ordered_json jr;
    jr["bbox"] = bbox_json(r.box);
    jr["kind"] = to_string(r.kind);
    regions.push_back(std::move(jr));
  }
  j["regions"] = std::move(regions);
  return j;
}

Page page_from_json(const nlohmann::json& j) {
  try {
    Page p;
    p.source_id = j.at("source_id").get<std::string>();
    p.width_px = j.at("width_px").get<int>();
    p.height_px = j.at("height_px").get<int>();
    p.rotation_deg = j.at("rotation_deg").get<int>();
    if (p.width_px <= 0 || p.height_px <= 0) throw SchemaError("page dimensions must be positive");
    for (const auto& jw : j.at("words")) {
      Word w;
      w.box = bbox_from(jw.at("bbox"));
      w.text = jw.at("text").get<std::string>();
      w.confidence = jw.at("conf").get<double>();
      w.fontsize = jw.at("fontsize").get<double>();
      w.ascenders = jw.at("asc").get<double>();
      w.descenders = jw.at("desc").get<double>();
      w.rotation_deg = jw.at("angle").get<int>();
      p.words.push_back(std::move(w));
    }
    for (const auto& jr : j.at("regions")) {
      Region r;
      r.box = bbox_from(jr.at("bbox"));
      const std::string kind = jr.at("kind").get<std::string>();
      if (kind == "carea") r.kind = RegionKind::carea;
      else if (kind == "paragraph") r.kind = RegionKind::paragraph;
      else throw SchemaError("unknown region kind: " + kind);
      p.regions.push_back(r);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("page JSON: ") + e.what());
  }
}

}  // namespace figcap
