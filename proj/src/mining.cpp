#include "figcap/mining.hpp"

#include "figcap/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

namespace figcap {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

constexpr std::array<std::string_view, 7> kPrefixes = {"figure", "fig", "table", "tab",
                                                        "plate", "pl", "tbl"};

// Removes a leading keyword ("Fig.", "Table") and returns the rest.
std::string_view strip_keyword(std::string_view label, bool* plate = nullptr) {
  label = trim(label);
  const std::string low = lower(label);
  for (std::string_view p : kPrefixes) {
    if (low.size() < p.size() || low.compare(0, p.size(), p) != 0) continue;
    const std::size_t n = p.size();
    // The keyword must end the word ("Fig.", "Fig 3", not "Figaro").
    if (low.size() > n && std::isalpha(static_cast<unsigned char>(low[n]))) continue;
    if (plate) *plate = p == "plate" || p == "pl";
    std::string_view rest = label.substr(n);
    if (!rest.empty() && rest.front() == '.') rest.remove_prefix(1);
    return trim(rest);
  }
  if (plate) *plate = false;
  return label;
}

double pct(int num, int den) { return den ? 100.0 * num / den : 0.0; }

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::optional<BoxD> points_box(const nlohmann::json& j, double scale) {
  if (j.is_null()) return std::nullopt;
  const BoxD b{std::max(0.0, j.at("x1").get<double>() * scale),
               std::max(0.0, j.at("y1").get<double>() * scale),
               j.at("x2").get<double>() * scale, j.at("y2").get<double>() * scale};
  if (!b.valid()) return std::nullopt;
  return b;
}

}  // namespace

int roman_to_int(std::string_view s) {
  static const std::regex kStrict("^M{0,3}(CM|CD|D?C{0,3})(XC|XL|L?X{0,3})(IX|IV|V?I{0,3})$");
  const std::string u = upper(trim(s));
  if (u.empty() || !std::regex_match(u, kStrict))
    throw NotRoman("not a standard-form roman numeral: '" + std::string(s) + "'");
  auto value = [](char c) {
    switch (c) {
      case 'I': return 1;
      case 'V': return 5;
      case 'X': return 10;
      case 'L': return 50;
      case 'C': return 100;
      case 'D': return 500;
      default: return 1000;
    }
  };
  int total = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const int v = value(u[i]);
    if (i + 1 < u.size() && v < value(u[i + 1])) total -= v;
    else total += v;
  }
  return total;
}

bool sequence_parsable(std::span<const int> numbers) {
  if (numbers.empty()) return false;
  std::vector<int> sorted(numbers.begin(), numbers.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<int>(i) + 1) return false;
  return true;
}

LabelNumbers parse_label(std::string_view label) {
  std::string_view rest = strip_keyword(label);
  while (!rest.empty() && (rest.back() == '.' || rest.back() == ':' || rest.back() == ','))
    rest.remove_suffix(1);
  rest = trim(rest);
  LabelNumbers out;
  if (rest.empty()) return out;
  if (rest.size() <= 9 && std::all_of(rest.begin(), rest.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
      }))
    out.whole = std::stoi(std::string(rest));
  try {
    out.roman = roman_to_int(rest);
  } catch (const NotRoman&) {
  }
  return out;
}

bool is_plate_label(std::string_view label) {
  bool plate = false;
  strip_keyword(label, &plate);
  return plate;
}

ParsabilityVerdict article_parsability(std::string article_id,
                                       std::span<const MinedObject> objects) {
  ParsabilityVerdict v;
  v.article_id = std::move(article_id);
  auto judge = [&](ObjectKind kind, bool& parsable, NumberScheme& scheme) {
    std::vector<int> whole, roman;
    std::size_t total = 0;
    for (const MinedObject& o : objects) {
      if (o.kind != kind) continue;
      ++total;
      if (o.number_whole) whole.push_back(*o.number_whole);
      if (o.number_roman) roman.push_back(*o.number_roman);
    }
    if (whole.size() == total && sequence_parsable(whole)) {
      parsable = true;
      scheme = NumberScheme::whole;
    } else if (roman.size() == total && sequence_parsable(roman)) {
      parsable = true;
      scheme = NumberScheme::roman;
    }
  };
  judge(ObjectKind::figure, v.figures_parsable, v.figure_scheme);
  judge(ObjectKind::table, v.tables_parsable, v.table_scheme);
  return v;
}

std::vector<MinedObject> parse_pdffigures2(const nlohmann::json& j, int dpi_effective) {
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    if (!j.contains("figures")) throw SchemaError("miner JSON object lacks a 'figures' array");
    list = &j.at("figures");
  }
  if (!list->is_array()) throw SchemaError("miner JSON must be an array of figures");
  const double scale = dpi_effective / 72.0;
  std::vector<MinedObject> out;
  try {
    for (const auto& e : *list) {
      MinedObject o;
      const std::string type = e.at("figType").get<std::string>();
      o.label_raw = e.at("name").is_string() ? e.at("name").get<std::string>()
                                             : e.at("name").dump();
      const std::string t = lower(type);
      if (t == "table") o.kind = ObjectKind::table;
      else if (t == "figure" || t == "plate") o.kind = ObjectKind::figure;
      else throw SchemaError("unknown figType: " + type);
      if (is_plate_label(o.label_raw)) o.kind = ObjectKind::figure;
      const LabelNumbers n = parse_label(o.label_raw);
      o.number_whole = n.whole;
      o.number_roman = n.roman;
      if (e.contains("regionBoundary")) o.figure_box = points_box(e.at("regionBoundary"), scale);
      if (e.contains("captionBoundary")) o.caption_box = points_box(e.at("captionBoundary"), scale);
      o.page_index = e.value("page", 0);
      out.push_back(std::move(o));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("miner JSON: ") + ex.what());
  }
  return out;
}

std::vector<DecadeRow> corpus_report(std::span<const ArticleRecord> records) {
  struct Acc {
    int n = 0, fig = 0, tab = 0;
  };
  // Numeric decades sort before "unknown", which sorts before "all".
  auto bin_rank = [](const std::string& b) {
    if (b == "all") return std::make_pair(2, 0);
    if (b == "unknown") return std::make_pair(1, 0);
    return std::make_pair(0, std::stoi(b));
  };
  std::map<std::string, std::map<std::string, Acc>> acc;
  for (const ArticleRecord& r : records) {
    std::string bin = "unknown";
    if (r.year) {
      const int y = *r.year;
      const int decade = (y >= 0 ? y / 10 : (y - 9) / 10) * 10;
      bin = std::to_string(decade);
    }
    for (const std::string& b : {bin, std::string("all")}) {
      Acc& a = acc[r.tool][b];
      ++a.n;
      a.fig += r.verdict.figures_parsable ? 1 : 0;
      a.tab += r.verdict.tables_parsable ? 1 : 0;
    }
  }
  std::vector<DecadeRow> rows;
  for (const auto& [tool, bins] : acc) {
    std::vector<std::string> keys;
    for (const auto& kv : bins) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end(),
              [&](const std::string& a, const std::string& b) { return bin_rank(a) < bin_rank(b); });
    for (const std::string& k : keys) {
      const Acc& a = bins.at(k);
      rows.push_back({tool, k, a.n, pct(a.fig, a.n), pct(a.tab, a.n)});
    }
  }
  return rows;
}

std::string corpus_report_csv(std::span<const DecadeRow> rows) {
  std::vector<std::string> tools;
  std::vector<std::string> bins;
  for (const DecadeRow& r : rows) {
    if (std::find(tools.begin(), tools.end(), r.tool) == tools.end()) tools.push_back(r.tool);
    if (std::find(bins.begin(), bins.end(), r.bin) == bins.end()) bins.push_back(r.bin);
  }
  std::sort(tools.begin(), tools.end());
  auto rank = [](const std::string& b) {
    if (b == "all") return std::make_pair(2, 0);
    if (b == "unknown") return std::make_pair(1, 0);
    return std::make_pair(0, std::stoi(b));
  };
  std::sort(bins.begin(), bins.end(),
            [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << "bin";
  for (const auto& t : tools) o << ',' << t << "_articles," << t << "_figures_pct," << t << "_tables_pct";
  o << '\n';
  for (const auto& b : bins) {
    o << b;
    for (const auto& t : tools) {
      auto it = std::find_if(rows.begin(), rows.end(),
                             [&](const DecadeRow& r) { return r.tool == t && r.bin == b; });
      if (it == rows.end()) o << ",,,";
      else o << ',' << it->articles << ',' << it->figures_pct << ',' << it->tables_pct;
    }
    o << '\n';
  }
  return o.str();
}

std::map<std::string, ArticleMeta> parse_article_metadata(std::string_view csv) {
  std::map<std::string, ArticleMeta> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) return out;
  const auto header = split_csv_line(line);
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    return std::nullopt;
  };
  const auto id_col = col("article_id");
  if (!id_col) throw SchemaError("metadata CSV needs an article_id column");
  const auto year_col = col("year");
  const auto venue_col = col("venue");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (*id_col >= cells.size()) continue;
    ArticleMeta m;
    if (year_col && *year_col < cells.size()) {
      const std::string_view y = trim(cells[*year_col]);
      if (!y.empty() && std::all_of(y.begin(), y.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c));
          }) && y.size() <= 6)
        m.year = std::stoi(std::string(y));
    }
    if (venue_col && *venue_col < cells.size()) m.venue = std::string(trim(cells[*venue_col]));
    out[std::string(trim(cells[*id_col]))] = std::move(m);
  }
  return out;
}

const char* to_string(NumberScheme s) {
  switch (s) {
    case NumberScheme::whole: return "whole";
    case NumberScheme::roman: return "roman";
    default: return "none";
  }
}

const char* to_string(ObjectKind k) { return k == ObjectKind::table ? "table" : "figure"; }

}  // namespace figcap
