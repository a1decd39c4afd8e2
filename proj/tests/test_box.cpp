#include "figcap/box.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace figcap;

namespace {

// Per-pixel set membership over a grid; independent of the interval arithmetic.
struct PixelCounts {
  long a = 0, b = 0, both = 0;
};

PixelCounts brute_force(const PixelBox& a, const PixelBox& b, int grid) {
  PixelCounts c;
  for (int y = 0; y < grid; ++y)
    for (int x = 0; x < grid; ++x) {
      const bool in_a = x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1;
      const bool in_b = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
      c.a += in_a;
      c.b += in_b;
      c.both += in_a && in_b;
    }
  return c;
}

PixelBox random_box(std::mt19937& rng, int grid) {
  std::uniform_int_distribution<int> d(0, grid);
  for (;;) {
    int x0 = d(rng), x1 = d(rng), y0 = d(rng), y1 = d(rng);
    if (x0 == x1 || y0 == y1) continue;
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    return {x0, y0, x1, y1};
  }
}

}  // namespace

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou(BoxD{0, 0, 10, 10}, BoxD{0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou(BoxD{0, 0, 10, 10}, BoxD{20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(iou(BoxD{0, 0, 10, 10}, BoxD{5, 0, 15, 10}), 50.0 / 150.0);
  EXPECT_DOUBLE_EQ(iou(BoxD{0, 0, 10, 10}, BoxD{0.4, 0, 10.4, 10}), 1.0);
}

TEST(Iou, RoundsHalfAwayFromZero) {
  EXPECT_EQ(round_to_pixels(BoxD{0.5, 1.5, 2.5, 3.49}), (PixelBox{1, 2, 3, 3}));
}

TEST(Iou, DegenerateAfterRoundingIsZero) {
  EXPECT_EQ(iou(BoxD{0.1, 0, 0.3, 10}, BoxD{0, 0, 10, 10}), 0.0);
}

TEST(ExcessLost, Examples) {
  const BoxD t{0, 0, 100, 100};
  AreaPair p = excess_lost(t, t);
  EXPECT_EQ(p.iou, 1.0);
  EXPECT_EQ(p.excess_frac, 0.0);
  EXPECT_EQ(p.lost_frac, 0.0);

  p = excess_lost(t, BoxD{0, 0, 100, 110});
  EXPECT_DOUBLE_EQ(p.iou, 100.0 / 110.0);
  EXPECT_DOUBLE_EQ(p.excess_frac, 0.10);
  EXPECT_EQ(p.lost_frac, 0.0);

  p = excess_lost(t, BoxD{0, 5, 100, 100});
  EXPECT_DOUBLE_EQ(p.iou, 0.95);
  EXPECT_EQ(p.excess_frac, 0.0);
  EXPECT_DOUBLE_EQ(p.lost_frac, 0.05);
}

TEST(ExpandToInclude, Examples) {
  EXPECT_EQ(expand_to_include(BoxD{0, 0, 1, 1}, BoxD{0, 0, 1, 1}), (BoxD{0, 0, 1, 1}));
  EXPECT_EQ(expand_to_include(BoxD{0, 0, 1, 1}, BoxD{2, 2, 3, 3}), (BoxD{0, 0, 3, 3}));
  EXPECT_EQ(expand_to_include(BoxD{1, 1, 4, 2}, BoxD{0, 1.5, 2, 3}), (BoxD{0, 1, 4, 3}));
}

TEST(Box, Validity) {
  EXPECT_TRUE((BoxD{0, 0, 1, 1}).valid());
  EXPECT_FALSE((BoxD{0, 0, 0, 1}).valid());
  EXPECT_FALSE((BoxD{-1, 0, 1, 1}).valid());
  EXPECT_FALSE((BoxD{0, 0, std::numeric_limits<double>::infinity(), 1}).valid());
}

TEST(IouProperty, MatchesPixelBruteForce) {
  std::mt19937 rng(42);
  constexpr int grid = 60;
  for (int i = 0; i < 300; ++i) {
    const PixelBox a = random_box(rng, grid), b = random_box(rng, grid);
    const PixelCounts c = brute_force(a, b, grid);
    const double expect_iou =
        c.both ? static_cast<double>(c.both) / static_cast<double>(c.a + c.b - c.both) : 0.0;
    ASSERT_EQ(iou(a, b), expect_iou) << a << ' ' << b;
    const AreaPair p = excess_lost(a, b);
    ASSERT_EQ(p.excess_frac, static_cast<double>(c.b - c.both) / static_cast<double>(c.a));
    ASSERT_EQ(p.lost_frac, static_cast<double>(c.a - c.both) / static_cast<double>(c.a));
  }
}

TEST(IouProperty, SymmetricBoundedAndOneOnlyWhenIdentical) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(0, 100);
  for (int i = 0; i < 2000; ++i) {
    BoxD a{d(rng), d(rng), 0, 0}, b{d(rng), d(rng), 0, 0};
    a.x1 = a.x0 + 1 + d(rng);
    a.y1 = a.y0 + 1 + d(rng);
    b.x1 = b.x0 + 1 + d(rng);
    b.y1 = b.y0 + 1 + d(rng);
    const double v = iou(a, b);
    ASSERT_EQ(v, iou(b, a));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_EQ(v == 1.0, round_to_pixels(a) == round_to_pixels(b));
    const AreaPair p = excess_lost(a, b);
    ASSERT_LE(p.lost_frac, 1.0);
    ASSERT_EQ(p.iou == 1.0, p.excess_frac == 0.0 && p.lost_frac == 0.0);
    // lost pixels + intersection pixels = truth pixels
    const PixelOverlap o = pixel_overlap(a, b);
    ASSERT_NEAR(p.lost_frac * static_cast<double>(o.area_a) + static_cast<double>(o.inter),
                static_cast<double>(o.area_a), 1e-6);
  }
}
