#include "climategs/sh.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace climategs;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Real SH with the Condon-Shortley phase, built from the associated Legendre
// functions of the standard library.
double real_sh(int l, int m, const Vec3& d) {
  const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
  const double phi = std::atan2(d.y(), d.x());
  const int am = std::abs(m);
  const double k = std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) * factorial(l - am) / factorial(l + am));
  const double p = std::assoc_legendre(unsigned(l), unsigned(am), std::cos(theta));
  const double cs = (am % 2) ? -1.0 : 1.0;
  if (m == 0) return k * p;
  if (m > 0) return cs * std::sqrt(2.0) * k * p * std::cos(am * phi);
  return cs * std::sqrt(2.0) * k * p * std::sin(am * phi);
}

}  // namespace

TEST(ShBasis, MatchesLegendreConstruction) {
  std::mt19937_64 rng(7);
  for (int s = 0; s < 500; ++s) {
    const Vec3 d = testutil::random_unit(rng);
    const auto y = sh::basis(d);
    int idx = 0;
    for (int l = 0; l <= 3; ++l)
      for (int m = -l; m <= l; ++m, ++idx) EXPECT_NEAR(y[idx], real_sh(l, m, d), 1e-12) << "l=" << l << " m=" << m;
  }
}

TEST(ShBasis, OrthonormalUnderQuadrature) {
  const int nt = 200, np = 400;
  double gram[16][16] = {};
  for (int i = 0; i < nt; ++i) {
    const double theta = (i + 0.5) * M_PI / nt;
    for (int j = 0; j < np; ++j) {
      const double phi = (j + 0.5) * 2.0 * M_PI / np;
      const Vec3 d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      const double w = std::sin(theta) * (M_PI / nt) * (2.0 * M_PI / np);
      const auto y = sh::basis(d);
      for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) gram[a][b] += w * y[a] * y[b];
    }
  }
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) EXPECT_NEAR(gram[a][b], a == b ? 1.0 : 0.0, 2e-4) << a << "," << b;
}

TEST(ShBasis, DegreeTruncatesHigherBands) {
  const Vec3 d = Vec3(0.3, -0.5, 0.8).normalized();
  const auto y1 = sh::basis(d, 1);
  for (int i = 4; i < 16; ++i) EXPECT_EQ(y1[i], 0.0);
  const auto y0 = sh::basis(d, 0);
  for (int i = 1; i < 16; ++i) EXPECT_EQ(y0[i], 0.0);
}

TEST(EvalSh, DcOnlyIsViewIndependent) {
  ShCoeffs c;
  c.fill(Vec3::Zero());
  c[0] = Vec3(1.0, 0.0, -1.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Rgb col = eval_sh(c, testutil::random_unit(rng));
    EXPECT_NEAR(col.x(), 0.5 + sh::kC0, 1e-15);
    EXPECT_NEAR(col.y(), 0.5, 1e-15);
    EXPECT_NEAR(col.z(), 0.5 - sh::kC0, 1e-15);
  }
}

TEST(EvalSh, ZeroCoefficientsGiveMidGray) {
  ShCoeffs c;
  c.fill(Vec3::Zero());
  EXPECT_TRUE(eval_sh(c, Vec3::UnitZ()).isApprox(Rgb::Constant(0.5)));
}

TEST(EvalSh, RejectsNonUnitDirection) {
  ShCoeffs c;
  c.fill(Vec3::Zero());
  EXPECT_THROW(eval_sh(c, Vec3(0.0, 0.0, 2.0)), Error);
  EXPECT_THROW(eval_sh(c, Vec3::UnitZ(), 4), Error);
}

TEST(EvalSh, DcFromColorRoundTrips) {
  const Rgb target(0.1, 0.7, 1.3);
  ShCoeffs c;
  c.fill(Vec3::Zero());
  c[0] = dc_from_color(target);
  EXPECT_TRUE(eval_sh(c, Vec3::UnitX()).isApprox(target, 1e-14));
}

TEST(EvalSh, RowConstantsAreBasisMagnitudes) {
  const auto lam = sh::row_constants();
  EXPECT_DOUBLE_EQ(lam[0], 0.28209479177387814);
  for (double v : lam) EXPECT_GT(v, 0.0);
}
