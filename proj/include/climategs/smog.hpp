#pragma once

#include "climategs/rasterizer.hpp"

namespace climategs {

struct SmogParams {
  Rgb color = Rgb(0.7, 0.7, 0.72);
  double density = 0.0;  // extinction per world unit
};

/// Beer-Lambert attenuation of the scene toward the smog color, with no
/// in-scattering: out = T c + (1 - T) c_smog, T = exp(-density * depth).
/// Sky pixels have infinite depth and take the smog color.
inline FrameBuffer apply_smog(const FrameBuffer& fb, const SmogParams& p) {
  if (fb.depth.size() != fb.pixel_count() || fb.alpha_acc.size() != fb.pixel_count())
    throw Error("apply_smog: frame has no depth buffer");
  if (!(p.density >= 0.0)) throw ParamError("smog.density", "must be >= 0");
  FrameBuffer out = fb;
  if (p.density == 0.0) return out;
  parallel_for(std::size_t(fb.height), [&](std::size_t y) {
    for (int x = 0; x < fb.width; ++x) {
      const std::size_t i = fb.index(x, int(y));
      const double t = fb.is_sky(i) ? 0.0 : std::exp(-p.density * fb.surface_depth(i));
      out.color[i] = t * fb.color[i] + (1.0 - t) * p.color;
    }
  });
  return out;
}

}  // namespace climategs
