#include "climategs/gaussian.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

using namespace climategs;

TEST(Covariance, IdentityAndDiagonalCases) {
  Gaussian g;
  EXPECT_TRUE(covariance(g).isApprox(Mat3::Identity()));
  g.scale = Vec3(2.0, 1.0, 1.0);
  Mat3 expect = Vec3(4.0, 1.0, 1.0).asDiagonal();
  EXPECT_TRUE(covariance(g).isApprox(expect));
}

TEST(Covariance, EigenvaluesAreSquaredScales) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    Gaussian g = testutil::random_gaussian(rng);
    const Mat3 sigma = covariance(g);
    EXPECT_TRUE(sigma.isApprox(sigma.transpose(), 1e-14));
    Eigen::SelfAdjointEigenSolver<Mat3> es(sigma);
    Vec3 ev = es.eigenvalues();
    Vec3 s2 = g.scale.cwiseProduct(g.scale);
    std::sort(s2.data(), s2.data() + 3);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(ev[k], s2[k], 1e-9);
    EXPECT_GT(ev.minCoeff(), 0.0);
    // Each scaled rotation axis is an eigenvector.
    const Mat3 r = g.rotation.toRotationMatrix();
    for (int k = 0; k < 3; ++k)
      EXPECT_TRUE((sigma * r.col(k)).isApprox(g.scale[k] * g.scale[k] * r.col(k), 1e-9));
  }
}

TEST(GaussianValidate, RejectsBadInvariants) {
  Gaussian g;
  EXPECT_TRUE(g.validate().empty());
  g.scale = Vec3(1.0, 0.0, 1.0);
  EXPECT_FALSE(g.validate().empty());
  g = Gaussian{};
  g.opacity = 1.5;
  EXPECT_FALSE(g.validate().empty());
  g = Gaussian{};
  g.rotation = Quat(2.0, 0.0, 0.0, 0.0);
  EXPECT_FALSE(g.validate().empty());
}

TEST(EvalShProperties, ExampleRowZero) {
  ShCoeffs c;
  c.fill(Vec3::Zero());
  c[0] = Vec3(1.0, 0.0, 0.0);
  const Rgb col = eval_sh(c, Vec3(0.0, 0.6, 0.8));
  EXPECT_NEAR(col.x(), 0.7820948, 1e-7);
  EXPECT_NEAR(col.y(), 0.5, 1e-15);
}

TEST(EvalShProperties, OddBandsFlipUnderNegation) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const ShCoeffs c = testutil::random_sh(rng);
    const Vec3 d = testutil::random_unit(rng);
    const auto y = sh::basis(d);
    // Even bands: l = 0 (index 0) and l = 2 (indices 4..8).
    Rgb even = Rgb::Zero();
    for (int k : {0, 4, 5, 6, 7, 8}) even += y[k] * c[k];
    const Rgb sum = eval_sh(c, d) + eval_sh(c, -d);
    EXPECT_TRUE(sum.isApprox(2.0 * (Rgb::Constant(0.5) + even), 1e-12));
  }
}

TEST(EvalShProperties, AffineInCoefficients) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const ShCoeffs a = testutil::random_sh(rng), b = testutil::random_sh(rng);
    const double ka = 1.7, kb = -0.4;
    ShCoeffs mix;
    for (int k = 0; k < kShCoeffCount; ++k) mix[k] = ka * a[k] + kb * b[k];
    const Vec3 d = testutil::random_unit(rng);
    const Rgb lhs = eval_sh(mix, d);
    const Rgb rhs = ka * eval_sh(a, d) + kb * eval_sh(b, d) - (ka + kb - 1.0) * Rgb::Constant(0.5);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Scene, BoundsAndAppend) {
  std::vector<Gaussian> gs(2);
  gs[0].center = Vec3(-1.0, 2.0, 3.0);
  gs[1].center = Vec3(4.0, -5.0, 0.5);
  const GaussianScene s(gs, 1);
  EXPECT_TRUE(s.bounds().min.isApprox(Vec3(-1.0, -5.0, 0.5)));
  EXPECT_TRUE(s.bounds().max.isApprox(Vec3(4.0, 2.0, 3.0)));
  Gaussian extra;
  extra.center = Vec3(10.0, 0.0, 0.0);
  const auto t = s.with_appended({extra});
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.sh_degree(), 1);
  EXPECT_DOUBLE_EQ(t.bounds().max.x(), 10.0);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_THROW(GaussianScene(gs, 4), Error);
}

TEST(CameraModel, LookAtProjectsTargetToCenter) {
  const Camera cam = Camera::look_at(Vec3(3.0, 2.0, -4.0), Vec3(0.5, 0.0, 1.0), Vec3::UnitY(), 320, 240);
  EXPECT_TRUE(cam.validate().empty());
  const Vec3 v = cam.to_view(Vec3(0.5, 0.0, 1.0));
  EXPECT_GT(v.z(), 0.0);
  EXPECT_TRUE(cam.project(v).isApprox(Vec2(160.0, 120.0), 1e-9));
  EXPECT_TRUE(cam.position().isApprox(Vec3(3.0, 2.0, -4.0), 1e-12));
  // World up maps to negative view y (image rows grow downward).
  EXPECT_LT((cam.rotation * Vec3::UnitY()).y(), 0.0);
}

TEST(CameraModel, ResizedKeepsFieldOfView) {
  const Camera cam = Camera::look_at(Vec3(0, 0, -5), Vec3::Zero(), Vec3::UnitY(), 640, 360);
  const Camera half = cam.resized(320, 180);
  const Vec3 v = cam.to_view(Vec3(0.7, -0.3, 0.2));
  EXPECT_TRUE((half.project(v) * 2.0).isApprox(cam.project(v), 1e-12));
}
