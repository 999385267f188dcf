#include "climategs/rasterizer.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace climategs;

namespace {

Gaussian flat_splat(const Vec3& center, double scale_xy, double opacity, const Rgb& color) {
  Gaussian g;
  g.center = center;
  g.scale = Vec3(scale_xy, scale_xy, 1e-3);
  g.opacity = opacity;
  g.sh[0] = dc_from_color(color);
  return g;
}

}  // namespace

TEST(Project, OnAxisFootprint) {
  Camera cam = testutil::straight_camera(64, 64, 100.0);
  Gaussian g;
  g.center = Vec3(0.0, 0.0, 10.0);
  g.scale = Vec3::Constant(0.1);
  const auto splats = project(GaussianScene({g}), cam);
  ASSERT_EQ(splats.size(), 1u);
  EXPECT_TRUE(splats[0].mean2d.isApprox(cam.principal_point));
  // Regularization adds the fixed floor to the diagonal of the pinhole footprint.
  const Mat2 raw = splats[0].cov2d - kCov2dFloor * Mat2::Identity();
  const double expect = std::pow(100.0 * 0.1 / 10.0, 2);
  EXPECT_NEAR(raw(0, 0), expect, 1e-9);
  EXPECT_NEAR(raw(1, 1), expect, 1e-9);
  EXPECT_NEAR(raw(0, 1), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(splats[0].view_depth, 10.0);
}

TEST(Project, CullsBehindCameraAndSortsByDepth) {
  Camera cam = testutil::straight_camera();
  Gaussian behind, far, near;
  behind.center = Vec3(0, 0, -3);
  far.center = Vec3(0.1, 0, 7);
  near.center = Vec3(-0.1, 0, 3);
  for (Gaussian* g : {&behind, &far, &near}) g->scale = Vec3::Constant(0.1);
  const auto splats = project(GaussianScene({behind, far, near}), cam);
  ASSERT_EQ(splats.size(), 2u);
  EXPECT_DOUBLE_EQ(splats[0].view_depth, 3.0);
  EXPECT_DOUBLE_EQ(splats[1].view_depth, 7.0);
  EXPECT_EQ(splats[0].source_index, 2u);
  EXPECT_EQ(splats[1].source_index, 1u);
}

TEST(Project, CullsSubPixelSplats) {
  Camera cam = testutil::straight_camera(64, 64, 100.0);
  Gaussian g;
  g.center = Vec3(0, 0, 50);
  g.scale = Vec3::Constant(1e-4);
  EXPECT_TRUE(project(GaussianScene({g}), cam).empty());
}

TEST(Project, ColorUsesCenterToCameraDirection) {
  Camera cam = testutil::straight_camera();
  Gaussian g;
  g.center = Vec3(0.0, 0.0, 4.0);
  g.scale = Vec3::Constant(0.2);
  g.sh[3] = Vec3(1.0, 0.0, 0.0);  // -C1 * x term
  g.sh[2] = Vec3(0.0, 1.0, 0.0);  // C1 * z term
  const auto s = project(GaussianScene({g}), cam);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(s[0].color.isApprox(eval_sh(g.sh, Vec3::UnitZ())));
  EXPECT_NEAR(s[0].color.y(), 0.5 + sh::kC1, 1e-12);
}

TEST(Rasterize, EmptySceneIsBackground) {
  RenderOptions opts;
  opts.background = Rgb(0.1, 0.2, 0.3);
  const auto fb = rasterize(GaussianScene{}, testutil::straight_camera(), opts);
  for (std::size_t i = 0; i < fb.pixel_count(); ++i) {
    EXPECT_EQ(fb.color[i], opts.background);
    EXPECT_EQ(fb.alpha_acc[i], 0.0);
    EXPECT_EQ(fb.depth[i], 0.0);
    EXPECT_TRUE(fb.is_sky(i));
  }
}

TEST(Rasterize, SingleSplatClosedForm) {
  Camera cam = testutil::straight_camera(32, 32, 40.0);
  const Gaussian g = flat_splat(Vec3(0.0, 0.0, 5.0), 2.0, 0.99, Rgb(0.8, 0.4, 0.2));
  RenderOptions opts;
  opts.background = Rgb(0.0, 0.0, 1.0);
  opts.keep_samples = true;
  const auto fb = rasterize(GaussianScene({g}), cam, opts);
  const auto splats = project(GaussianScene({g}), cam);
  const Mat2 conic = splats[0].conic();
  for (int y : {3, 16, 20}) {
    for (int x : {5, 15, 28}) {
      const Vec2 d = pixel_center(x, y) - splats[0].mean2d;
      const double a = std::min(0.99, 0.99 * std::exp(-0.5 * d.dot(conic * d)));
      const std::size_t i = fb.index(x, y);
      if (a < 1.0 / 255.0) continue;
      EXPECT_NEAR(fb.alpha_acc[i], a, 1e-12);
      EXPECT_NEAR(fb.depth[i], 5.0 * a, 1e-12);
      EXPECT_NEAR(fb.surface_depth(i), 5.0, 1e-12);
      EXPECT_TRUE(fb.color[i].isApprox(a * Rgb(0.8, 0.4, 0.2) + (1.0 - a) * opts.background, 1e-12));
      const auto& smp = pixel_samples(fb, x, y);
      ASSERT_EQ(smp.size(), 1u);
      EXPECT_NEAR(smp[0].alpha, a, 1e-12);
    }
  }
}

TEST(Rasterize, TwoStackedSplatsExpansion) {
  Camera cam = testutil::straight_camera(32, 32, 40.0);
  const Rgb c1(0.9, 0.1, 0.1), c2(0.1, 0.9, 0.2), bg(0.2, 0.2, 0.6);
  const Gaussian g1 = flat_splat(Vec3(0.1, 0.0, 3.0), 1.0, 0.6, c1);
  const Gaussian g2 = flat_splat(Vec3(-0.2, 0.1, 6.0), 2.0, 0.8, c2);
  RenderOptions opts;
  opts.background = bg;
  opts.keep_samples = true;
  const GaussianScene scene({g2, g1});
  const auto fb = rasterize(scene, cam, opts);
  const auto sp = project(scene, cam);
  ASSERT_EQ(sp.size(), 2u);
  for (int y = 0; y < 32; y += 3) {
    for (int x = 0; x < 32; x += 3) {
      double a[2];
      for (int k = 0; k < 2; ++k) {
        const Vec2 d = pixel_center(x, y) - sp[k].mean2d;
        a[k] = std::min(0.99, sp[k].opacity * std::exp(-0.5 * d.dot(sp[k].conic() * d)));
        if (a[k] < 1.0 / 255.0) a[k] = 0.0;
      }
      const Rgb expect = c1 * a[0] + c2 * a[1] * (1 - a[0]) + bg * (1 - a[0]) * (1 - a[1]);
      EXPECT_LT((fb.color[fb.index(x, y)] - expect).cwiseAbs().maxCoeff(), 1e-12) << x << "," << y;
      const auto& smp = pixel_samples(fb, x, y);
      for (std::size_t k = 1; k < smp.size(); ++k) EXPECT_LT(smp[k - 1].depth, smp[k].depth);
    }
  }
}

TEST(Rasterize, AlphaClampedAndEarlyStop) {
  Camera cam = testutil::straight_camera(16, 16, 20.0);
  std::vector<Gaussian> gs;
  for (int k = 0; k < 10; ++k) gs.push_back(flat_splat(Vec3(0, 0, 2.0 + k), 5.0, 1.0, Rgb(0.5, 0.5, 0.5)));
  RenderOptions opts;
  opts.keep_samples = true;
  const auto fb = rasterize(GaussianScene(gs), cam, opts);
  const auto& smp = pixel_samples(fb, 8, 8);
  // Each alpha is clamped to 0.99. In floating point 0.01^2 lands just above the
  // 1e-4 cutoff, so the third splat is the last one composited.
  ASSERT_EQ(smp.size(), 3u);
  for (const auto& s : smp) EXPECT_DOUBLE_EQ(s.alpha, 0.99);
  EXPECT_NEAR(fb.alpha_acc[fb.index(8, 8)], 1.0 - 1e-6, 1e-12);
}

TEST(Rasterize, PixelSamplesErrors) {
  const auto fb = rasterize(GaussianScene{}, testutil::straight_camera());
  EXPECT_THROW(pixel_samples(fb, 0, 0), Error);
  RenderOptions opts;
  opts.keep_samples = true;
  const auto fb2 = rasterize(GaussianScene{}, testutil::straight_camera(), opts);
  EXPECT_TRUE(pixel_samples(fb2, 0, 0).empty());
  EXPECT_THROW(pixel_samples(fb2, -1, 0), Error);
  opts.transmittance_cutoff = 0.0;
  EXPECT_THROW(rasterize(GaussianScene{}, testutil::straight_camera(), opts), Error);
}

TEST(Rasterize, AlphaAccumulationInvariants) {
  std::mt19937_64 rng(21);
  std::vector<Gaussian> gs;
  for (int i = 0; i < 300; ++i) {
    Gaussian g = testutil::random_gaussian(rng, 1.5);
    g.center.z() += 6.0;
    gs.push_back(g);
  }
  const auto fb = rasterize(GaussianScene(gs), testutil::straight_camera(96, 64, 60.0));
  for (std::size_t i = 0; i < fb.pixel_count(); ++i) {
    EXPECT_GE(fb.alpha_acc[i], 0.0);
    EXPECT_LE(fb.alpha_acc[i], 1.0);
    EXPECT_TRUE(fb.color[i].allFinite());
    if (fb.alpha_acc[i] == 0.0) {
      EXPECT_EQ(fb.depth[i], 0.0);
    }
  }
}

TEST(Rasterize, DeterministicAcrossRuns) {
  std::mt19937_64 rng(4);
  std::vector<Gaussian> gs;
  for (int i = 0; i < 500; ++i) gs.push_back(testutil::random_gaussian(rng));
  const GaussianScene scene(gs);
  const Camera cam = Camera::look_at(Vec3(0, 1, -8), Vec3::Zero(), Vec3::UnitY(), 80, 60);
  const auto a = rasterize(scene, cam), b = rasterize(scene, cam);
  EXPECT_EQ(a.color, b.color);
  EXPECT_EQ(a.depth, b.depth);
}

TEST(SampleNormalView, UnitLengthAndCenterFacesCamera) {
  const Vec3 vc(0.3, -0.2, 5.0);
  Mat2 conic;
  conic << 0.05, 0.01, 0.01, 0.08;
  const Vec2 f(100.0, 100.0);
  EXPECT_TRUE(sample_normal_view(vc, conic, Vec2::Zero(), f).isApprox(-vc.normalized()));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 n = sample_normal_view(vc, conic, Vec2(u(rng), u(rng)), f);
    EXPECT_NEAR(n.norm(), 1.0, 1e-6);
  }
}
