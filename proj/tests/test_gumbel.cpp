#include "climategs/gumbel.hpp"
#include "floater_suite.hpp"

#include <gtest/gtest.h>

using namespace climategs;

TEST(GumbelDepth, EmptyAndSingle) {
  const auto e = gumbel_depth(std::vector<DepthSample>{});
  EXPECT_EQ(e.depth, 0.0);
  EXPECT_EQ(e.weight, 0.0);
  const std::vector<DepthSample> one = {{5.0, 0.9}};
  const auto r = gumbel_depth(one);
  EXPECT_DOUBLE_EQ(r.depth, 5.0);
  EXPECT_DOUBLE_EQ(r.weight, 0.9);
}

TEST(GumbelDepth, FloaterThenSurface) {
  const std::vector<DepthSample> s = {{2.0, 0.05}, {5.0, 0.6}, {5.05, 0.6}, {5.1, 0.6}};
  const auto r = gumbel_depth(s);
  // Oracle: the heaviest contiguous run, then its weighted mean.
  const auto run = testutil::best_contiguous_run(s, 0.3);
  EXPECT_EQ(r.first, run.first);
  EXPECT_EQ(r.last, run.second);
  EXPECT_NEAR(r.depth, testutil::weighted_mean(s, run), 1e-12);
  EXPECT_NEAR(r.depth, 5.05, 0.05);
  // Surface weights after the floater: 0.95 * (0.6 + 0.24 + 0.096).
  EXPECT_NEAR(r.weight, 0.95 * (0.6 + 0.4 * 0.6 + 0.16 * 0.6), 1e-12);
  // Alpha-blended depth, computed directly.
  double t = 1.0, d = 0.0;
  for (const auto& x : s) {
    d += x.alpha * t * x.depth;
    t *= 1.0 - x.alpha;
  }
  EXPECT_DOUBLE_EQ(expected_depth(s), d);
  EXPECT_GT(std::abs(d - 5.05), std::abs(r.depth - 5.05));
}

TEST(GumbelDepth, PdfIsNormalized) {
  double sum = 0.0;
  const double h = 1e-3;
  for (double x = -5.0; x < 20.0; x += h) sum += gumbel_pdf(x, 1.0, 0.7) * h;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  EXPECT_NEAR(gumbel_pdf(1.0, 1.0, 0.2), 1.0 / (0.2 * M_E), 1e-12);
}

TEST(GumbelDepth, SplitsWellSeparatedSurfaces) {
  // Two surfaces; the nearer one is faint, the farther dominates.
  const std::vector<DepthSample> s = {{1.0, 0.2}, {1.02, 0.2}, {4.0, 0.9}, {4.01, 0.5}};
  const auto r = gumbel_depth(s);
  EXPECT_EQ(r.first, 2u);
  EXPECT_EQ(r.last, 4u);
  // An opaque near surface wins instead.
  const std::vector<DepthSample> s2 = {{1.0, 0.9}, {4.0, 0.9}};
  EXPECT_DOUBLE_EQ(gumbel_depth(s2).depth, 1.0);
}

TEST(GumbelDepth, FloaterSuite) {
  const auto suite = testutil::floater_suite(100);
  ASSERT_EQ(suite.size(), 100u);
  double g_err = 0.0, a_err = 0.0;
  int agree = 0;
  for (const auto& ray : suite) {
    const auto r = gumbel_depth(ray.samples);
    g_err += std::abs(r.depth - ray.truth);
    a_err += std::abs(expected_depth(ray.samples) - ray.truth);
    const auto run = testutil::best_contiguous_run(ray.samples, 0.3);
    if (run.first == r.first && run.second == r.last) ++agree;
  }
  EXPECT_LE(g_err / 100.0, 0.1);
  EXPECT_GT(a_err / 100.0, 0.5);
  EXPECT_GE(agree, 95);
  std::printf("gumbel mean error %.4f, alpha-blend mean error %.4f, oracle agreement %d/100\n", g_err / 100.0,
              a_err / 100.0, agree);
}
