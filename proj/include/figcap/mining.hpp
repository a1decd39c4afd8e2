#pragma once

#include "figcap/box.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace figcap {

enum class ObjectKind { figure, table };

/// One figure or table reported by an external PDF miner.
struct MinedObject {
  ObjectKind kind = ObjectKind::figure;
  std::string label_raw;
  std::optional<int> number_whole;
  std::optional<int> number_roman;
  std::optional<BoxD> caption_box;
  std::optional<BoxD> figure_box;
  int page_index = 0;

  bool standard_label() const { return number_whole || number_roman; }
};

enum class NumberScheme { none, whole, roman };

struct ParsabilityVerdict {
  std::string article_id;
  bool figures_parsable = false;
  bool tables_parsable = false;
  NumberScheme figure_scheme = NumberScheme::none;
  NumberScheme table_scheme = NumberScheme::none;
};

/// Strict standard-form roman numeral (I..MMMCMXCIX). Lowercase input is
/// accepted. Throws NotRoman for anything else, including "IC" and "XIIII".
int roman_to_int(std::string_view s);

/// True iff the numbers are exactly a permutation of 1..N.
bool sequence_parsable(std::span<const int> numbers);

struct LabelNumbers {
  std::optional<int> whole;
  std::optional<int> roman;
};

/// Strips a leading "Figure"/"Fig."/"Table"/"Tab."/"Plate" keyword and
/// trailing punctuation, then reads the remainder as a whole number and as a
/// roman numeral. "4a" and similar labels yield neither.
LabelNumbers parse_label(std::string_view label);

/// True when the label begins with a "Plate"/"Pl." keyword.
bool is_plate_label(std::string_view label);

/// Per kind, an article is parsable when either numbering scheme alone turns
/// every object of that kind into the sequence 1..N. Objects with non-standard
/// labels stay in N. Input order does not matter.
ParsabilityVerdict article_parsability(std::string article_id,
                                       std::span<const MinedObject> objects);

/// Reads a miner figure list ({regionBoundary, captionBoundary, figType,
/// name, page} in 72-dpi points) and converts boxes to the page-pixel frame.
/// Accepts either a bare array or an object with a "figures" array.
/// Throws SchemaError.
std::vector<MinedObject> parse_pdffigures2(const nlohmann::json& j, int dpi_effective = 300);

struct ArticleRecord {
  std::string tool;
  ParsabilityVerdict verdict;
  std::optional<int> year;
};

struct DecadeRow {
  std::string tool;
  std::string bin;  ///< "1950", ..., "unknown", or "all"
  int articles = 0;
  double figures_pct = 0;
  double tables_pct = 0;
};

/// Percent of figure- and table-parsable articles per tool and 10-year bin,
/// plus an "all" row per tool. Bins without articles do not appear.
std::vector<DecadeRow> corpus_report(std::span<const ArticleRecord> records);

/// Wide CSV: one row per bin, one column group per tool.
std::string corpus_report_csv(std::span<const DecadeRow> rows);

struct ArticleMeta {
  std::optional<int> year;
  std::string venue;
};

/// article_id,year,venue (header row required). Unparseable years are absent.
std::map<std::string, ArticleMeta> parse_article_metadata(std::string_view csv);

const char* to_string(NumberScheme s);
const char* to_string(ObjectKind k);

}  // namespace figcap
