#pragma once

// Real spherical harmonics up to degree 3, using the band constants and
// coefficient ordering of the reference Gaussian splatting implementation.

#include "climategs/core.hpp"

#include <array>
#include <cmath>

namespace climategs {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kShCoeffCount = 16;

using ShCoeffs = std::array<Vec3, kShCoeffCount>;

namespace sh {

inline constexpr double kC0 = 0.28209479177387814;
inline constexpr double kC1 = 0.4886025119029199;
inline constexpr std::array<double, 5> kC2 = {1.0925484305920792, -1.0925484305920792,
                                              0.31539156525252005, -1.0925484305920792,
                                              0.5462742152960396};
inline constexpr std::array<double, 7> kC3 = {-0.5900435899266435, 2.890611442640554,
                                              -0.4570457994644658, 0.3731763325901154,
                                              -0.4570457994644658, 1.445305721320277,
                                              -0.5900435899266435};

/// DC offset added at evaluation so that zero coefficients render mid-gray.
inline constexpr double kDcOffset = 0.5;

inline constexpr int coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Values of the 16 basis functions at `dir`, including signs. Entries above
/// `degree` are zero.
inline std::array<double, kShCoeffCount> basis(const Vec3& dir, int degree = kMaxShDegree) {
  std::array<double, kShCoeffCount> y{};
  const double x = dir.x(), yy = dir.y(), z = dir.z();
  y[0] = kC0;
  if (degree < 1) return y;
  y[1] = -kC1 * yy;
  y[2] = kC1 * z;
  y[3] = -kC1 * x;
  if (degree < 2) return y;
  const double xx = x * x, y2 = yy * yy, zz = z * z;
  const double xy = x * yy, yz = yy * z, xz = x * z;
  y[4] = kC2[0] * xy;
  y[5] = kC2[1] * yz;
  y[6] = kC2[2] * (2.0 * zz - xx - y2);
  y[7] = kC2[3] * xz;
  y[8] = kC2[4] * (xx - y2);
  if (degree < 3) return y;
  y[9] = kC3[0] * yy * (3.0 * xx - y2);
  y[10] = kC3[1] * xy * z;
  y[11] = kC3[2] * yy * (4.0 * zz - xx - y2);
  y[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * y2);
  y[13] = kC3[4] * x * (4.0 * zz - xx - y2);
  y[14] = kC3[5] * z * (xx - y2);
  y[15] = kC3[6] * x * (xx - 3.0 * y2);
  return y;
}

/// Magnitude of the normalization constant of each coefficient row.
inline std::array<double, kShCoeffCount> row_constants() {
  return {kC0,           kC1,           kC1,           kC1,           std::abs(kC2[0]),
          std::abs(kC2[1]), std::abs(kC2[2]), std::abs(kC2[3]), std::abs(kC2[4]),
          std::abs(kC3[0]), std::abs(kC3[1]), std::abs(kC3[2]), std::abs(kC3[3]),
          std::abs(kC3[4]), std::abs(kC3[5]), std::abs(kC3[6])};
}

}  // namespace sh

/// View-dependent color: 0.5 + sum of coefficient rows weighted by the basis.
/// The result is not clamped. Throws Error when `dir` is not unit length.
inline Rgb eval_sh(const ShCoeffs& coeffs, const Vec3& dir, int degree = kMaxShDegree) {
  if (std::abs(dir.norm() - 1.0) > 1e-6) throw Error("eval_sh: direction is not unit length");
  if (degree < 0 || degree > kMaxShDegree) throw Error("eval_sh: degree out of range");
  const auto y = sh::basis(dir, degree);
  Rgb c = Rgb::Constant(sh::kDcOffset);
  const int n = sh::coeff_count(degree);
  for (int i = 0; i < n; ++i) c += y[i] * coeffs[i];
  return c;
}

/// DC coefficient row that renders as `color` from every direction.
inline Vec3 dc_from_color(const Rgb& color) { return (color.array() - sh::kDcOffset) / sh::kC0; }

}  // namespace climategs
