#pragma once

// Rays through a ground plane seen behind a cloud of faint floaters. Each ray
// keeps its composited (depth, alpha) list and the analytic surface depth.

#include "climategs/gumbel.hpp"
#include "climategs/synthetic.hpp"

#include <vector>

namespace testutil {

using namespace climategs;

struct SuiteRay {
  std::vector<DepthSample> samples;
  double truth = 0.0;
};

inline std::vector<SuiteRay> floater_suite(std::size_t count = 100, std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.seed = seed;
  PlanePrimitive ground;
  ground.size = Vec2(6.0, 6.0);
  ground.spacing = 0.1;
  FloaterCloud cloud;
  cloud.min = Vec3(-2.5, 1.5, -2.5);
  cloud.max = Vec3(2.5, 4.0, 2.5);
  cloud.count = 300;
  cloud.scale = 0.1;
  cloud.opacity_min = 0.1;
  cloud.opacity_max = 0.3;
  spec.primitives = {ground, cloud};
  const auto syn = generate_synthetic_scene(spec);
  const Camera cam = Camera::look_at(Vec3(0.0, 6.0, -1.0), Vec3::Zero(), Vec3::UnitY(), 96, 64, 40.0);
  RenderOptions opts;
  opts.keep_samples = true;
  const auto fb = rasterize(syn.scene(), cam, opts);
  const auto truth = syn.depth_map(cam);
  std::vector<SuiteRay> out;
  for (int y = 0; y < cam.height && out.size() < count; y += 2) {
    for (int x = 0; x < cam.width && out.size() < count; x += 3) {
      const double t = truth[fb.index(x, y)];
      if (!std::isfinite(t)) continue;
      const auto& s = pixel_samples(fb, x, y);
      bool floater = false;
      for (const auto& d : s) floater = floater || (d.depth < t - 0.5 && d.alpha >= 0.05);
      if (floater) out.push_back({s, t});
    }
  }
  return out;
}

/// Brute force over every contiguous run of samples whose depth span is at most
/// `span`: returns the run [first, last) with the largest compositing weight.
inline std::pair<std::size_t, std::size_t> best_contiguous_run(const std::vector<DepthSample>& s, double span) {
  std::vector<double> w(s.size());
  double t = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    w[i] = s[i].alpha * t;
    t *= 1.0 - s[i].alpha;
  }
  double best = -1.0;
  std::pair<std::size_t, std::size_t> run{0, 0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = i; j < s.size() && s[j].depth - s[i].depth <= span; ++j) {
      sum += w[j];
      if (sum > best) {
        best = sum;
        run = {i, j + 1};
      }
    }
  }
  return run;
}

inline double weighted_mean(const std::vector<DepthSample>& s, std::pair<std::size_t, std::size_t> run) {
  double t = 1.0, sw = 0.0, swd = 0.0;
  for (std::size_t i = 0; i < run.second; ++i) {
    if (i >= run.first) {
      sw += s[i].alpha * t;
      swd += s[i].alpha * t * s[i].depth;
    }
    t *= 1.0 - s[i].alpha;
  }
  return sw > 0.0 ? swd / sw : 0.0;
}

}  // namespace testutil
