#include "figcap/error.hpp"
#include "figcap/mining.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace figcap;

namespace {

// Test-only inverse for the round-trip property.
std::string int_to_roman(int n) {
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
}

MinedObject obj(ObjectKind kind, const std::string& label) {
  MinedObject o;
  o.kind = kind;
  o.label_raw = label;
  const LabelNumbers n = parse_label(label);
  o.number_whole = n.whole;
  o.number_roman = n.roman;
  return o;
}

}  // namespace

TEST(Roman, Examples) {
  EXPECT_EQ(roman_to_int("IV"), 4);
  EXPECT_EQ(roman_to_int("XIX"), 19);
  EXPECT_EQ(roman_to_int("mcmxc"), 1990);
  EXPECT_THROW(roman_to_int("IC"), NotRoman);
  EXPECT_THROW(roman_to_int("XIIII"), NotRoman);
  EXPECT_THROW(roman_to_int(""), NotRoman);
  EXPECT_THROW(roman_to_int("VV"), NotRoman);
}

TEST(Roman, RoundTrip) {
  for (int i = 1; i <= 100; ++i) EXPECT_EQ(roman_to_int(int_to_roman(i)), i);
}

TEST(Sequence, Examples) {
  EXPECT_TRUE(sequence_parsable(std::vector{1, 2, 3}));
  EXPECT_TRUE(sequence_parsable(std::vector{3, 1, 2}));
  EXPECT_FALSE(sequence_parsable(std::vector{1, 3}));
  EXPECT_FALSE(sequence_parsable(std::vector{1, 2, 2, 3}));
  EXPECT_FALSE(sequence_parsable(std::vector<int>{}));
}

TEST(Label, Parsing) {
  EXPECT_EQ(parse_label("Figure 3").whole, 3);
  EXPECT_EQ(parse_label("Fig. 12.").whole, 12);
  EXPECT_EQ(parse_label("Table IV").roman, 4);
  EXPECT_EQ(parse_label("Tab. IV").roman, 4);
  EXPECT_FALSE(parse_label("4a").whole);
  EXPECT_FALSE(parse_label("4a").roman);
  EXPECT_TRUE(is_plate_label("Plate 2"));
  EXPECT_FALSE(is_plate_label("Figure 2"));
}

TEST(Article, Examples) {
  std::vector<MinedObject> o{obj(ObjectKind::figure, "1"), obj(ObjectKind::figure, "2"),
                             obj(ObjectKind::figure, "3"), obj(ObjectKind::table, "I"),
                             obj(ObjectKind::table, "II")};
  ParsabilityVerdict v = article_parsability("a", o);
  EXPECT_TRUE(v.figures_parsable);
  EXPECT_TRUE(v.tables_parsable);
  EXPECT_EQ(v.figure_scheme, NumberScheme::whole);
  EXPECT_EQ(v.table_scheme, NumberScheme::roman);

  o = {obj(ObjectKind::figure, "1"), obj(ObjectKind::figure, "2"), obj(ObjectKind::figure, "4a")};
  v = article_parsability("b", o);
  EXPECT_FALSE(v.figures_parsable);
  EXPECT_EQ(v.figure_scheme, NumberScheme::none);

  v = article_parsability("c", std::vector<MinedObject>{});
  EXPECT_FALSE(v.figures_parsable);
  EXPECT_FALSE(v.tables_parsable);
}

TEST(Article, SchemesNotMixed) {
  std::vector<MinedObject> o{obj(ObjectKind::figure, "1"), obj(ObjectKind::figure, "II")};
  EXPECT_FALSE(article_parsability("m", o).figures_parsable);
}

TEST(Article, PermutationInvariant) {
  std::mt19937 rng(5);
  std::vector<MinedObject> o;
  for (const char* l : {"1", "2", "3", "4", "IV", "I", "II", "III"})
    o.push_back(obj(std::string(l).find_first_of("IV") == std::string::npos ? ObjectKind::figure
                                                                            : ObjectKind::table,
                    l));
  const ParsabilityVerdict ref = article_parsability("p", o);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(o.begin(), o.end(), rng);
    const ParsabilityVerdict v = article_parsability("p", o);
    EXPECT_EQ(v.figures_parsable, ref.figures_parsable);
    EXPECT_EQ(v.tables_parsable, ref.tables_parsable);
    EXPECT_EQ(v.figure_scheme, ref.figure_scheme);
    EXPECT_EQ(v.table_scheme, ref.table_scheme);
  }
}

TEST(Pdffigures2, ScalingAndFields) {
  const auto j = nlohmann::json::parse(R"([
    {"name":"1","figType":"Figure","page":2,
     "regionBoundary":{"x1":72,"y1":72,"x2":144,"y2":144},
     "captionBoundary":{"x1":72,"y1":150,"x2":144,"y2":160}},
    {"name":"IV","figType":"Table","page":3}])");
  const auto objs = parse_pdffigures2(j, 300);
  ASSERT_EQ(objs.size(), 2u);
  EXPECT_EQ(*objs[0].figure_box, (BoxD{300, 300, 600, 600}));
  EXPECT_EQ(objs[0].page_index, 2);
  EXPECT_EQ(objs[0].number_whole, 1);
  EXPECT_EQ(objs[1].kind, ObjectKind::table);
  EXPECT_EQ(objs[1].number_roman, 4);
  EXPECT_TRUE(parse_pdffigures2(nlohmann::json::array()).empty());
  EXPECT_TRUE(parse_pdffigures2(nlohmann::json::parse(R"({"figures":[]})")).empty());
  EXPECT_THROW(parse_pdffigures2(nlohmann::json::parse(R"([{"name":"1"}])")), SchemaError);
  EXPECT_THROW(parse_pdffigures2(nlohmann::json::parse(R"([{"name":"1","figType":"Chart"}])")),
               SchemaError);
}

TEST(CorpusReport, BinsAndAll) {
  std::vector<ArticleRecord> recs;
  for (int i = 0; i < 10; ++i) {
    ArticleRecord r;
    r.tool = "t";
    r.verdict.figures_parsable = i < 3;
    r.year = 1955;
    recs.push_back(r);
  }
  ArticleRecord unknown;
  unknown.tool = "t";
  recs.push_back(unknown);
  const auto rows = corpus_report(recs);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].bin, "1950");
  EXPECT_DOUBLE_EQ(rows[0].figures_pct, 30.0);
  EXPECT_EQ(rows[1].bin, "unknown");
  EXPECT_EQ(rows[2].bin, "all");
  EXPECT_EQ(rows[2].articles, 11);
}

TEST(CorpusReport, TwoToolsTwoColumnSets) {
  std::vector<ArticleRecord> recs(2);
  recs[0].tool = "a";
  recs[0].year = 1960;
  recs[1].tool = "b";
  recs[1].year = 1960;
  const std::string csv = corpus_report_csv(corpus_report(recs));
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_NE(header.find("a_figures_pct"), std::string::npos);
  EXPECT_NE(header.find("b_figures_pct"), std::string::npos);
}

TEST(Metadata, Parse) {
  const auto m = parse_article_metadata("article_id,year,venue\nx,1931,ApJ\ny,,AJ\nz,n/a,MNRAS\n");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("x").year, 1931);
  EXPECT_FALSE(m.at("y").year);
  EXPECT_FALSE(m.at("z").year);
  EXPECT_EQ(m.at("x").venue, "ApJ");
}
