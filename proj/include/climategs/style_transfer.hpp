#pragma once

// Photorealistic style transfer as one affine color map applied uniformly to
// every spherical-harmonics band. Coefficients are first moved into a unified
// color space by scaling each row with its basis constant, so the same map acts
// on the DC color and on the view-dependent rows alike.

#include "climategs/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <optional>
#include <span>

namespace climategs {

inline constexpr int kFactorRank = 16;

/// Per-row scale into the unified color space, plus the DC offset.
struct UnifiedSHMap {
  std::array<double, kShCoeffCount> lambda = sh::row_constants();
  double dc_offset = sh::kDcOffset;

  ShCoeffs to_unified(const ShCoeffs& in) const {
    ShCoeffs out;
    for (int i = 0; i < kShCoeffCount; ++i) out[i] = lambda[i] * in[i];
    out[0].array() += dc_offset;
    return out;
  }
  ShCoeffs to_sh(const ShCoeffs& in) const {
    ShCoeffs out;
    out[0] = (in[0].array() - dc_offset) / lambda[0];
    for (int i = 1; i < kShCoeffCount; ++i) out[i] = in[i] / lambda[i];
    return out;
  }
};

inline ShCoeffs sh_to_unified(const ShCoeffs& sh) { return UnifiedSHMap{}.to_unified(sh); }
inline ShCoeffs unified_to_sh(const ShCoeffs& u) { return UnifiedSHMap{}.to_sh(u); }

/// Affine RGB map c' = M c + b, optionally carrying the P T Q factors it was built from.
struct ColorTransform {
  struct Factors {
    Eigen::Matrix<double, 3, kFactorRank> p;
    Eigen::Matrix<double, kFactorRank, kFactorRank> t;
    Eigen::Matrix<double, kFactorRank, 3> q;
  };

  Mat3 matrix = Mat3::Identity();
  Vec3 bias = Vec3::Zero();
  std::optional<Factors> factors;
  bool regularized = false;  // estimation had to load a degenerate covariance

  static ColorTransform identity() { return {}; }
  static ColorTransform affine(const Mat3& m, const Vec3& b) {
    ColorTransform t;
    t.matrix = m;
    t.bias = b;
    return t;
  }
  static ColorTransform from_factors(const Factors& f, const Vec3& b) {
    ColorTransform t;
    t.matrix = f.p * f.t * f.q;
    t.bias = b;
    t.factors = f;
    return t;
  }

  Rgb apply(const Rgb& c) const { return matrix * c + bias; }
  bool invertible() const { return std::abs(matrix.determinant()) > 1e-9; }
};

/// outer(inner(c)).
inline ColorTransform compose(const ColorTransform& outer, const ColorTransform& inner) {
  return ColorTransform::affine(outer.matrix * inner.matrix, outer.matrix * inner.bias + outer.bias);
}

inline ColorTransform invert_transform(const ColorTransform& t) {
  if (!t.invertible()) throw Error("invert_transform: matrix is singular");
  const Mat3 inv = t.matrix.inverse();
  return ColorTransform::affine(inv, -inv * t.bias);
}

/// Applies the map to one coefficient set: DC row affinely, other rows linearly.
inline ShCoeffs transform_coeffs(const ShCoeffs& sh, const ColorTransform& t, const UnifiedSHMap& map = {}) {
  ShCoeffs u = map.to_unified(sh);
  u[0] = t.matrix * u[0] + t.bias;
  for (int i = 1; i < kShCoeffCount; ++i) u[i] = t.matrix * u[i];
  return map.to_sh(u);
}

/// New scene with every Gaussian's color mapped; geometry and opacity untouched.
inline GaussianScene apply_transform(const GaussianScene& scene, const ColorTransform& t) {
  std::vector<Gaussian> out = scene.gaussians();
  const UnifiedSHMap map;
  parallel_for(out.size(), [&](std::size_t i) { out[i].sh = transform_coeffs(out[i].sh, t, map); });
  return GaussianScene(std::move(out), scene.sh_degree());
}

/// Normalize with the content map, then colorize with the style map.
inline GaussianScene two_stage_pipeline(const GaussianScene& scene, const ColorTransform& content,
                                        const ColorTransform& style) {
  return apply_transform(apply_transform(scene, content), style);
}

struct StyleStats {
  Rgb mean = Rgb::Zero();
  Mat3 covariance = Mat3::Zero();
};

inline StyleStats compute_stats(std::span<const Rgb> pixels) {
  StyleStats s;
  if (pixels.empty()) return s;
  for (const auto& p : pixels) s.mean += p;
  s.mean /= double(pixels.size());
  for (const auto& p : pixels) {
    const Vec3 d = p - s.mean;
    s.covariance += d * d.transpose();
  }
  s.covariance /= double(pixels.size());
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
  return s;
}

enum class EstimateMethod { MeanStd, FullCovariance };

namespace detail {

inline constexpr double kCovarianceEpsilon = 1e-6;

// Symmetric matrix power for p = 1/2 or -1/2 with eigenvalues clamped at epsilon.
inline Mat3 spd_power(const Mat3& m, double p) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  const Vec3 ev = es.eigenvalues().cwiseMax(kCovarianceEpsilon);
  const Vec3 powed = ev.array().pow(p);
  return es.eigenvectors() * powed.asDiagonal() * es.eigenvectors().transpose();
}

// Adds epsilon to the diagonal when the covariance is (near) singular.
inline bool load_if_degenerate(Mat3& cov) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() >= kCovarianceEpsilon) return false;
  cov.diagonal().array() += kCovarianceEpsilon;
  return true;
}

}  // namespace detail

/// Closed-form map that moves the content pixel statistics onto the style statistics.
inline ColorTransform estimate_transform(std::span<const Rgb> content, std::span<const Rgb> style,
                                         EstimateMethod method = EstimateMethod::FullCovariance) {
  if (content.size() < 2 || style.size() < 2) throw Error("estimate_transform: need at least 2 pixels per set");
  StyleStats c = compute_stats(content), s = compute_stats(style);
  ColorTransform t;
  if (method == EstimateMethod::MeanStd) {
    Mat3 m = Mat3::Zero();
    for (int k = 0; k < 3; ++k) {
      double vc = c.covariance(k, k), vs = s.covariance(k, k);
      if (vc < detail::kCovarianceEpsilon) {
        vc += detail::kCovarianceEpsilon;
        t.regularized = true;
      }
      if (vs < detail::kCovarianceEpsilon) {
        vs += detail::kCovarianceEpsilon;
        t.regularized = true;
      }
      m(k, k) = std::sqrt(vs / vc);
    }
    t.matrix = m;
  } else {
    t.regularized = detail::load_if_degenerate(c.covariance);
    t.regularized = detail::load_if_degenerate(s.covariance) || t.regularized;
    t.matrix = detail::spd_power(s.covariance, 0.5) * detail::spd_power(c.covariance, -0.5);
  }
  t.bias = s.mean - t.matrix * c.mean;
  return t;
}

}  // namespace climategs
