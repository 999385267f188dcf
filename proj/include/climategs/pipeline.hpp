#pragma once

// Frame pipeline shared by the CLI and the service. Passes run in the fixed
// order style -> snow -> flood -> smog: style and snow change the Gaussians
// before rasterization, then snow shading, flood and smog run per pixel.

#include "climategs/climate_params.hpp"
#include "climategs/style_metrics.hpp"

#include <chrono>
#include <sstream>

namespace climategs {

struct PassSet {
  bool style = false;
  bool snow = false;
  bool flood = false;
  bool smog = false;

  bool empty() const { return !(style || snow || flood || smog); }
  bool operator==(const PassSet&) const = default;

  /// Comma-separated names, e.g. "snow,smog". Empty string gives no passes.
  static PassSet parse(const std::string& list) {
    PassSet p;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name.empty()) continue;
      p.enable(name);
    }
    return p;
  }

  void enable(const std::string& name) {
    if (name == "style") style = true;
    else if (name == "snow") snow = true;
    else if (name == "flood") flood = true;
    else if (name == "smog") smog = true;
    else throw ParamError("passes", "unknown pass '" + name + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    if (style) out.emplace_back("style");
    if (snow) out.emplace_back("snow");
    if (flood) out.emplace_back("flood");
    if (smog) out.emplace_back("smog");
    return out;
  }
};

struct FrameTimings {
  double style_ms = 0.0;
  double raster_ms = 0.0;
  double snow_ms = 0.0;   // deferred snow shading only; placement is timed separately
  double flood_ms = 0.0;
  double smog_ms = 0.0;
  double total_ms = 0.0;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Builds the Gaussians to rasterize: the optional style transform over the
/// base scene, then the placed snow.
inline GaussianScene prepare_scene(const GaussianScene& base, const PassSet& passes,
                                   const ColorTransform* transform, const std::vector<Gaussian>* snow,
                                   FrameTimings* timings = nullptr) {
  const bool styled = passes.style && transform;
  Stopwatch sw;
  GaussianScene scene = styled ? apply_transform(base, *transform) : base;
  if (timings) timings->style_ms = styled ? sw.elapsed_ms() : 0.0;
  if (passes.snow && snow && !snow->empty()) scene = scene.with_appended(*snow);
  return scene;
}

/// Rasterizes a prepared scene and runs the enabled deferred passes.
inline FrameBuffer render_frame(const GaussianScene& prepared, const Camera& cam, const ClimateParams& climate,
                                const PassSet& passes, double time, const RenderOptions& opts = {},
                                FrameTimings* timings = nullptr) {
  if (!(time >= 0.0)) throw ParamError("time", "must be >= 0");
  Stopwatch total;
  RenderOptions ro = opts;
  ro.defer_snow = true;
  Stopwatch sw;
  FrameBuffer fb = rasterize(prepared, cam, ro);
  const double raster = sw.elapsed_ms();
  double snow_ms = 0.0, flood_ms = 0.0, smog_ms = 0.0;
  if (passes.snow) {
    Stopwatch s;
    fb = shade_snow(fb, cam, climate.snow);
    snow_ms = s.elapsed_ms();
  }
  if (passes.flood) {
    Stopwatch s;
    fb = apply_flood(fb, cam, climate.water, time);
    flood_ms = s.elapsed_ms();
  }
  if (passes.smog) {
    Stopwatch s;
    fb = apply_smog(fb, climate.smog);
    smog_ms = s.elapsed_ms();
  }
  if (timings) {
    timings->raster_ms = raster;
    timings->snow_ms = snow_ms;
    timings->flood_ms = flood_ms;
    timings->smog_ms = smog_ms;
    timings->total_ms = timings->style_ms + total.elapsed_ms();
  }
  return fb;
}

}  // namespace climategs
