#pragma once

// Robust surface depth along a ray. Ordered (depth, alpha) samples are grouped
// into clusters, each modeled as a Gumbel distribution; a sample that is
// unlikely under the open cluster starts a new one. The depth is the mean of
// the cluster carrying the largest compositing weight, so thin low-opacity
// floaters in front of a surface do not pull the estimate forward.

#include "climategs/rasterizer.hpp"

#include <span>

namespace climategs {

struct GumbelOptions {
  double initial_scale = 0.2;    // beta of a freshly opened cluster
  double min_scale = 1e-3;
  double accept_density = 0.5;   // pdf threshold for joining the open cluster
};

inline double gumbel_pdf(double x, double mu, double beta) {
  const double z = (x - mu) / beta;
  return std::exp(-z - std::exp(-z)) / beta;
}

struct GumbelDepth {
  double depth = 0.0;
  double weight = 0.0;      // sum of alpha_i T_i over the chosen cluster
  std::size_t first = 0;    // sample range [first, last) of the chosen cluster
  std::size_t last = 0;
};

/// Samples must be in ascending depth order. Returns weight 0 for an empty list.
inline GumbelDepth gumbel_depth(std::span<const DepthSample> samples, const GumbelOptions& opt = {}) {
  const double var0 = M_PI * M_PI * opt.initial_scale * opt.initial_scale / 6.0;
  GumbelDepth best;
  bool open = false;
  std::size_t first = 0;
  // Sums are kept relative to the first depth of the cluster.
  double x0 = 0.0, seed_w = 0.0, sw = 0.0, swx = 0.0, swxx = 0.0, mu = 0.0, beta = opt.initial_scale;

  auto close = [&](std::size_t end) {
    if (best.weight <= sw) best = {mu, sw, first, end};
  };

  double t = 1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i].depth, a = samples[i].alpha;
    const double w = a * t;
    if (open && gumbel_pdf(x, mu, beta) < opt.accept_density) {
      close(i);
      open = false;
    }
    if (!open) {
      open = true;
      first = i;
      x0 = x;
      seed_w = w;
      sw = swx = swxx = 0.0;
    }
    const double dx = x - x0;
    sw += w;
    swx += w * dx;
    swxx += w * dx * dx;
    if (sw > 0.0) {
      const double m = swx / sw;
      mu = x0 + m;
      // The seed sample also carries the prior spread of a fresh cluster.
      const double var = (seed_w * var0 + std::max(0.0, swxx - sw * m * m)) / sw;
      beta = std::max(opt.min_scale, std::sqrt(6.0 * var) / M_PI);
    } else {
      mu = x0;
      beta = opt.initial_scale;
    }
    t *= 1.0 - a;
  }
  if (open) close(samples.size());
  return best;
}

/// Compositing-weighted mean depth, sum of alpha_i T_i d_i, without normalization.
inline double expected_depth(std::span<const DepthSample> samples) {
  double t = 1.0, d = 0.0;
  for (const auto& s : samples) {
    d += s.alpha * t * s.depth;
    t *= 1.0 - s.alpha;
  }
  return d;
}

}  // namespace climategs
