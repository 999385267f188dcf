#pragma once

// Evaluation metrics for style transfer: content consistency between two
// colorings of the same geometry, style distance between pixel statistics,
// and the cycle error of a transform followed by its inverse.

#include "climategs/image.hpp"
#include "climategs/rasterizer.hpp"
#include "climategs/style_transfer.hpp"

namespace climategs {

inline Image frame_to_image(const FrameBuffer& fb) {
  Image img(fb.width, fb.height);
  img.pixels = fb.color;
  return img;
}

/// Mean absolute per-channel difference.
inline double mean_l1(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw Error("mean_l1: image size mismatch");
  if (a.pixels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) sum += (a.pixels[i] - b.pixels[i]).cwiseAbs().sum();
  return sum / (3.0 * double(a.pixels.size()));
}

struct ContentConsistency {
  double dc_term = 0.0;     // mean L1 between unified DC colors
  double image_term = 0.0;  // mean L1 between renders, averaged over cameras
  double total() const { return dc_term + image_term; }
};

inline ContentConsistency content_consistency_metric(const GaussianScene& a, const GaussianScene& b,
                                                     std::span<const Camera> cameras, const RenderOptions& opts = {}) {
  if (a.size() != b.size()) throw Error("content_consistency_metric: Gaussian count mismatch");
  ContentConsistency r;
  const UnifiedSHMap map;
  if (!a.empty()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      sum += (map.to_unified(a[i].sh)[0] - map.to_unified(b[i].sh)[0]).cwiseAbs().sum();
    r.dc_term = sum / (3.0 * double(a.size()));
  }
  if (!cameras.empty()) {
    double sum = 0.0;
    for (const auto& cam : cameras)
      sum += mean_l1(frame_to_image(rasterize(a, cam, opts)), frame_to_image(rasterize(b, cam, opts)));
    r.image_term = sum / double(cameras.size());
  }
  return r;
}

/// Sum over channels of |mean difference| + |standard deviation difference|.
inline double style_distance_metric(const Image& image, const Image& style) {
  if (image.empty() || style.empty()) throw Error("style_distance_metric: empty image");
  const StyleStats a = compute_stats(image.pixels), b = compute_stats(style.pixels);
  double d = 0.0;
  for (int c = 0; c < 3; ++c)
    d += std::abs(a.mean[c] - b.mean[c]) + std::abs(std::sqrt(a.covariance(c, c)) - std::sqrt(b.covariance(c, c)));
  return d;
}

/// Mean L1 over every SH coefficient of two scenes with identical layout.
inline double coefficient_l1(const GaussianScene& a, const GaussianScene& b) {
  if (a.size() != b.size()) throw Error("coefficient_l1: Gaussian count mismatch");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int k = 0; k < kShCoeffCount; ++k) sum += (a[i].sh[k] - b[i].sh[k]).cwiseAbs().sum();
  return sum / (3.0 * kShCoeffCount * double(a.size()));
}

struct CycleError {
  double coefficient_term = 0.0;
  double image_term = 0.0;
  double total() const { return coefficient_term + image_term; }
};

/// Maps the scene forward then backward and measures how far it lands from the original.
inline CycleError cycle_error_metric(const GaussianScene& scene, const ColorTransform& forward,
                                     const ColorTransform& backward, const Camera& cam, const Image& reference,
                                     const RenderOptions& opts = {}) {
  const GaussianScene cycled = apply_transform(apply_transform(scene, forward), backward);
  CycleError e;
  e.coefficient_term = coefficient_l1(cycled, scene);
  e.image_term = mean_l1(frame_to_image(rasterize(cycled, cam, opts)), reference);
  return e;
}

inline CycleError cycle_error_metric(const GaussianScene& scene, const ColorTransform& forward, const Camera& cam,
                                     const Image& reference, const RenderOptions& opts = {}) {
  return cycle_error_metric(scene, forward, invert_transform(forward), cam, reference, opts);
}

}  // namespace climategs
