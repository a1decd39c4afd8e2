#include "figcap/error.hpp"
#include "figcap/features.hpp"
#include "figcap/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace figcap;

namespace {

Page page_with_sizes(std::initializer_list<double> sizes) {
  Page p;
  p.width_px = 1000;
  p.height_px = 1000;
  double x = 0;
  for (double s : sizes) {
    Word w;
    w.box = {x, 0, x + 10, 10};
    w.text = "w";
    w.fontsize = s;
    w.ascenders = s;
    w.descenders = s;
    p.words.push_back(w);
    x += 20;
  }
  return p;
}

std::uint8_t affine(double v) { return static_cast<std::uint8_t>(std::lround(128 + 127 * v / 5)); }

}  // namespace

TEST(Fontsize, ConstantPageIs128) {
  for (std::uint8_t b : normalize_fontsize(page_with_sizes({10, 10, 10}))) EXPECT_EQ(b, 128);
}

TEST(Fontsize, ZScoreBytes) {
  const auto b = normalize_fontsize(page_with_sizes({8, 10, 12}));
  // population std of {8,10,12} is sqrt(8/3)
  const double z = 2.0 / std::sqrt(8.0 / 3.0);
  EXPECT_EQ(b[1], 128);
  EXPECT_EQ(b[2], affine(z));
  EXPECT_EQ(b[0], affine(-z));
}

TEST(Fontsize, OutliersBeyondFiveSigmaIgnored) {
  std::vector<double> sizes(60, 10.0);
  sizes[0] = 9;
  sizes[1] = 11;
  sizes.push_back(1000);
  Page p;
  p.width_px = p.height_px = 100;
  for (double s : sizes) p.words.push_back({{0, 0, 1, 1}, "w", 0, s});
  EXPECT_EQ(normalize_fontsize(p).back(), 0);
}

TEST(Typo, Examples) {
  const auto b = normalize_typo(page_with_sizes({1, 2, 3}), TypoMetric::ascenders);
  EXPECT_EQ(b[2], 153);
  const auto c = normalize_typo(page_with_sizes({0, 2, 2}), TypoMetric::descenders);
  EXPECT_EQ(c[0], 77);
  for (std::uint8_t v : normalize_typo(page_with_sizes({4, 4}), TypoMetric::ascenders)) EXPECT_EQ(v, 128);
}

TEST(CharClass, Examples) {
  EXPECT_EQ(char_class_channels({{}, "abc"}), (CharClassBytes{255, 125, 125}));
  const CharClassBytes a1 = char_class_channels({{}, "a1"});
  EXPECT_EQ(a1.pct_let, 190);
  EXPECT_EQ(a1.pct_num, 190);
  EXPECT_EQ(char_class_channels({{}, ","}).punct, 250);
  EXPECT_EQ(char_class_channels({{}, ""}), (CharClassBytes{0, 0, 0}));
}

TEST(Rotation, Bins) {
  EXPECT_EQ(rotation_channel(0), 85);
  EXPECT_EQ(rotation_channel(90), 170);
  EXPECT_EQ(rotation_channel(180), 170);
  EXPECT_EQ(rotation_channel(270), 255);
}

TEST(Categories, Examples) {
  EXPECT_EQ(category_byte(18, kPosCardinality), 255);
  EXPECT_EQ(category_byte(0, kPosCardinality), 13);
  EXPECT_EQ(category_byte(25, kDepCardinality), 130);
  EXPECT_THROW(category_byte(19, kPosCardinality), ProviderCardinalityViolation);
  EXPECT_THROW(category_byte(-1, kPosCardinality), ProviderCardinalityViolation);
}

TEST(Linguistic, SidecarLengthAndCardinality) {
  Page p = page_with_sizes({10, 10});
  EXPECT_THROW(linguistic_channels(p, sidecar_tag_provider({{0, 0, 0}})), SchemaError);
  EXPECT_THROW(linguistic_channels(p, sidecar_tag_provider({{0, 0, 0}, {19, 0, 0}})),
               ProviderCardinalityViolation);
  const auto b = linguistic_channels(p, sidecar_tag_provider({{0, 0, 25}, {18, 56, 50}}));
  EXPECT_EQ(b[0].pos, 13);
  EXPECT_EQ(b[0].dep, 130);
  EXPECT_EQ(b[1].pos, 255);
  EXPECT_EQ(b[1].tag, 255);
}

TEST(Channels, Sets) {
  const auto m12 = parse_channel_set("m12");
  ASSERT_EQ(m12.size(), 9u);
  const std::vector<ChannelId> expect{ChannelId::gs,      ChannelId::asc,     ChannelId::dec,
                                      ChannelId::wc,      ChannelId::pct_num, ChannelId::pct_let,
                                      ChannelId::punct,   ChannelId::t_ang,   ChannelId::sp_pos};
  EXPECT_EQ(m12, expect);
  EXPECT_EQ(parse_channel_set("all").size(), kChannelCount);
  EXPECT_EQ(parse_channel_set("gs").size(), 1u);
  EXPECT_THROW(parse_channel_set("gs,bogus"), UsageError);
}

TEST(Rasterize, BlankPageIsAllZero) {
  Page p;
  p.width_px = 300;
  p.height_px = 200;
  const GrayImage white = GrayImage::Constant(200, 300, 255);
  const FeatureStack s = rasterize(p, white, parse_channel_set("all"));
  ASSERT_EQ(s.channels.size(), kChannelCount);
  for (const auto& c : s.channels) {
    ASSERT_EQ(c.plane.rows(), kStackSize);
    EXPECT_EQ(c.plane.maxCoeff(), 0) << channel_name(c.id);
  }
}

TEST(Rasterize, CenteredWordScalesToStackCenter) {
  Page p;
  p.width_px = 1024;
  p.height_px = 2048;
  p.words.push_back({{412, 924, 612, 1124}, "abc", 90, 10, 2, 1, 0});
  const FeatureStack s =
      rasterize(p, GrayImage::Constant(2048, 1024, 255), std::vector{ChannelId::pct_let});
  const Plane& pl = s.channels[0].plane;
  // 200 px of 1024 is 100 of 512 wide; 200 of 2048 is 50 of 512 tall.
  int cols = 0, rows = 0;
  for (int x = 0; x < kStackSize; ++x) cols += pl(256, x) != 0;
  for (int y = 0; y < kStackSize; ++y) rows += pl(y, 256) != 0;
  EXPECT_NEAR(cols, 100, 1);
  EXPECT_NEAR(rows, 50, 1);
  EXPECT_EQ(pl(256, 256), 255);
  EXPECT_EQ(pl(0, 0), 0);
}

TEST(Rasterize, DimensionMismatch) {
  Page p;
  p.width_px = 10;
  p.height_px = 10;
  EXPECT_THROW(rasterize(p, GrayImage::Constant(5, 10, 255), m12_channels()), DimensionMismatch);
}

TEST(Rasterize, InvariantsOnSyntheticPages) {
  const auto all = parse_channel_set("all");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SynthPage sp = synth_page(seed);
    const FeatureStack s = rasterize(sp.page, sp.image, all);
    // Coverage mask of word boxes in stack coordinates, computed independently.
    Image<std::uint8_t> covered = Image<std::uint8_t>::Zero(kStackSize, kStackSize);
    const double sx = kStackSize / static_cast<double>(sp.page.width_px);
    const double sy = kStackSize / static_cast<double>(sp.page.height_px);
    for (const Word& w : sp.page.words) {
      const int x0 = std::max(0, static_cast<int>(std::floor(w.box.x0 * sx)) - 1);
      const int x1 = std::min(kStackSize, static_cast<int>(std::ceil(w.box.x1 * sx)) + 1);
      const int y0 = std::max(0, static_cast<int>(std::floor(w.box.y0 * sy)) - 1);
      const int y1 = std::min(kStackSize, static_cast<int>(std::ceil(w.box.y1 * sy)) + 1);
      covered.block(y0, x0, y1 - y0, x1 - x0).setOnes();
    }
    for (const auto& c : s.channels) {
      std::set<int> values;
      for (int y = 0; y < kStackSize; ++y)
        for (int x = 0; x < kStackSize; ++x) {
          const int v = c.plane(y, x);
          values.insert(v);
          if (c.id != ChannelId::gs && c.id != ChannelId::p_b && c.id != ChannelId::c_b && !covered(y, x))
            ASSERT_EQ(v, 0) << channel_name(c.id) << " at " << x << ',' << y;
        }
      for (int v : values) {
        switch (c.id) {
          case ChannelId::pct_num:
          case ChannelId::pct_let: EXPECT_TRUE(v == 0 || v >= 125); break;
          case ChannelId::punct: EXPECT_TRUE(v == 0 || v == 125 || v == 250); break;
          case ChannelId::t_ang: EXPECT_TRUE(v == 0 || v == 85 || v == 170 || v == 255); break;
          case ChannelId::p_b:
          case ChannelId::c_b: EXPECT_TRUE(v == 0 || v == 255); break;
          default: break;
        }
      }
    }
    EXPECT_EQ(s, rasterize(sp.page, sp.image, all));
  }
}

TEST(Fstk, RoundTripAndLayout) {
  const SynthPage sp = synth_page(5);
  const FeatureStack s = rasterize(sp.page, sp.image, m12_channels());
  std::ostringstream os;
  write_fstk(os, s);
  const std::string bytes = os.str();
  EXPECT_EQ(bytes.substr(0, 5), "FSTK1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 9);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0);
  EXPECT_EQ(bytes.size(), 7u + 9 * 17 + 9u * kStackSize * kStackSize);
  std::istringstream is(bytes);
  const FeatureStack back = read_fstk(is);
  ASSERT_EQ(back.channels.size(), s.channels.size());
  for (std::size_t i = 0; i < s.channels.size(); ++i) EXPECT_EQ(back.channels[i], s.channels[i]);
}

TEST(Fstk, RejectsBadMagic) {
  std::istringstream is("NOPE!");
  EXPECT_THROW(read_fstk(is), SchemaError);
}
