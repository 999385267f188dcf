#pragma once

// Render session: holds the loaded scene, the active style transform, the
// climate parameters and a cache of snow placements. Parameter updates and
// renders serialize on one mutex; each render parallelizes internally.

#include "climategs/camera_io.hpp"
#include "climategs/pipeline.hpp"
#include "climategs/ply_io.hpp"
#include "climategs/transform_io.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <cstdint>
#include <map>
#include <mutex>

namespace climategs {

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), int(bytes.size()));
  out.resize(std::size_t(n));
  return out;
}

inline std::string base64_decode(std::string_view text) {
  std::string clean;
  for (const char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) throw ParamError("base64", "length must be a multiple of 4");
  std::string out(3 * clean.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()), int(clean.size()));
  if (n < 0) throw ParamError("base64", "invalid encoding");
  std::size_t pad = 0;
  while (pad < 2 && pad < clean.size() && clean[clean.size() - 1 - pad] == '=') ++pad;
  out.resize(std::size_t(n) - pad);
  return out;
}

struct SceneSummary {
  std::size_t count = 0;
  Bounds bounds;
  int sh_degree = 0;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"count", count}, {"sh_degree", sh_degree}};
    if (!bounds.empty()) {
      j["bounds"] = {{"min", {bounds.min.x(), bounds.min.y(), bounds.min.z()}},
                     {"max", {bounds.max.x(), bounds.max.y(), bounds.max.z()}}};
    } else {
      j["bounds"] = nullptr;
    }
    return j;
  }
};

struct RenderRequest {
  Camera camera;
  double time = 0.0;
  PassSet passes;
};

struct RenderResult {
  std::uint64_t frame_id = 0;
  std::vector<std::uint8_t> png;
  FrameTimings timings;
  double snow_prep_ms = 0.0;
  bool snow_cache_hit = false;
  int width = 0;
  int height = 0;
};

/// Named affine styles offered to the viewer.
inline const std::map<std::string, ColorTransform>& style_presets() {
  static const std::map<std::string, ColorTransform> presets = [] {
    std::map<std::string, ColorTransform> m;
    m["identity"] = ColorTransform::identity();
    Mat3 warm = Vec3(1.10, 1.0, 0.85).asDiagonal();
    m["warm"] = ColorTransform::affine(warm, Vec3(0.02, 0.0, -0.02));
    Mat3 cool = Vec3(0.90, 1.0, 1.12).asDiagonal();
    m["cool"] = ColorTransform::affine(cool, Vec3(-0.02, 0.0, 0.03));
    Mat3 sepia;
    sepia << 0.393, 0.769, 0.189, 0.349, 0.686, 0.168, 0.272, 0.534, 0.131;
    m["sepia"] = ColorTransform::affine(sepia, Vec3::Zero());
    Mat3 dusk = Vec3(0.85, 0.68, 0.77).asDiagonal();
    m["dusk"] = ColorTransform::affine(dusk, Vec3(0.05, 0.0, 0.03));
    return m;
  }();
  return presets;
}

class Session {
 public:
  SceneSummary load_scene_file(const std::string& path) { return install(load_scene(path)); }
  SceneSummary load_scene_bytes(std::string_view bytes) { return install(load_scene_from_bytes(bytes)); }

  /// Replaces the scene and resets the transform and snow cache. Climate parameters are kept.
  SceneSummary install(GaussianScene scene) {
    std::lock_guard lock(mu_);
    base_ = std::make_shared<const GaussianScene>(std::move(scene));
    transform_.reset();
    style_name_.clear();
    snow_cache_.clear();
    return summary_locked();
  }

  bool has_scene() const {
    std::lock_guard lock(mu_);
    return base_ != nullptr;
  }

  SceneSummary summary() const {
    std::lock_guard lock(mu_);
    return summary_locked();
  }

  /// Applies a partial parameter document:
  ///   {"reset": true, "smog": {...}, "water": {...}, "snow": {...},
  ///    "style": null | {"preset": name} | {"transform": {...}} | {"image_png_base64": "..."}}
  /// Nothing changes when any field is rejected.
  nlohmann::json set_params(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParamError("params", "expected an object");
    std::lock_guard lock(mu_);
    ClimateParams next = climate_;
    nlohmann::json climate_part = nlohmann::json::object();
    std::optional<std::optional<ColorTransform>> next_transform;
    std::string next_style;
    for (const auto& [k, v] : doc.items()) {
      if (k == "reset") {
        if (!v.is_boolean()) throw ParamError("reset", "expected a boolean");
        if (v.get<bool>()) {
          next = ClimateParams{};
          next_transform.emplace(std::nullopt);
        }
      } else if (k == "smog" || k == "water" || k == "snow") {
        climate_part[k] = v;
      } else if (k == "style") {
        if (v.is_null()) {
          next_transform.emplace(std::nullopt);
          next_style.clear();
        } else {
          next_transform.emplace(parse_style(v, next_style));
        }
      } else {
        throw ParamError(k, "unknown key");
      }
    }
    next = merge_climate(next, climate_part);
    climate_ = next;
    if (next_transform) {
      transform_ = *next_transform;
      style_name_ = transform_ ? next_style : std::string();
    }
    return effective_locked();
  }

  nlohmann::json effective_params() const {
    std::lock_guard lock(mu_);
    return effective_locked();
  }

  ClimateParams climate() const {
    std::lock_guard lock(mu_);
    return climate_;
  }

  RenderResult render(const RenderRequest& req) {
    std::lock_guard lock(mu_);
    if (!base_) throw Error("no scene loaded");
    if (const auto why = req.camera.validate(); !why.empty()) throw ParamError("camera", why);
    RenderResult r;
    const std::vector<Gaussian>* snow = nullptr;
    if (req.passes.snow) {
      const std::string key = snow_key(climate_.snow);
      auto it = snow_cache_.find(key);
      if (it == snow_cache_.end()) {
        ++snow_misses_;
        Stopwatch sw;
        it = snow_cache_.emplace(key, place_snow(*base_, climate_.snow)).first;
        r.snow_prep_ms = sw.elapsed_ms();
      } else {
        ++snow_hits_;
        r.snow_cache_hit = true;
      }
      snow = &it->second;
    }
    const GaussianScene prepared =
        prepare_scene(*base_, req.passes, transform_ ? &*transform_ : nullptr, snow, &r.timings);
    const FrameBuffer fb = render_frame(prepared, req.camera, climate_, req.passes, req.time, {}, &r.timings);
    r.png = encode_png(frame_to_image(fb));
    r.width = fb.width;
    r.height = fb.height;
    r.frame_id = ++last_frame_id_;
    return r;
  }

  std::uint64_t last_frame_id() const {
    std::lock_guard lock(mu_);
    return last_frame_id_;
  }
  std::size_t snow_cache_hits() const {
    std::lock_guard lock(mu_);
    return snow_hits_;
  }
  std::size_t snow_cache_misses() const {
    std::lock_guard lock(mu_);
    return snow_misses_;
  }

  /// Placement-relevant snow fields; lighting fields do not move the Gaussians.
  static std::string snow_key(const SnowParams& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%a|%a|%a,%a,%a|%a|%a,%a,%a", s.thickness, s.grid_spacing, s.up.x(), s.up.y(),
                  s.up.z(), s.min_up_dot, s.albedo.x(), s.albedo.y(), s.albedo.z());
    return buf;
  }

 private:
  SceneSummary summary_locked() const {
    SceneSummary s;
    if (base_) {
      s.count = base_->size();
      s.bounds = base_->bounds();
      s.sh_degree = base_->sh_degree();
    }
    return s;
  }

  nlohmann::json effective_locked() const {
    nlohmann::json j = climate_to_json(climate_);
    if (!transform_) j["style"] = nullptr;
    else {
      j["style"] = transform_to_json(*transform_);
      if (!style_name_.empty()) j["style"]["name"] = style_name_;
    }
    return j;
  }

  std::optional<ColorTransform> parse_style(const nlohmann::json& v, std::string& name) const {
    if (!v.is_object() || v.size() != 1) throw ParamError("style", "expected one of preset, transform, image_png_base64");
    if (v.contains("preset")) {
      if (!v["preset"].is_string()) throw ParamError("style.preset", "expected a string");
      name = v["preset"].get<std::string>();
      const auto& presets = style_presets();
      const auto it = presets.find(name);
      if (it == presets.end()) throw ParamError("style.preset", "unknown preset '" + name + "'");
      return it->second;
    }
    if (v.contains("transform")) {
      name = "custom";
      try {
        return transform_from_json(v["transform"]);
      } catch (const LoadError& e) {
        throw ParamError("style.transform", e.what());
      }
    }
    if (v.contains("image_png_base64")) {
      if (!base_) throw ParamError("style.image_png_base64", "load a scene before estimating a style");
      if (!v["image_png_base64"].is_string()) throw ParamError("style.image_png_base64", "expected a string");
      const std::string raw = climategs::base64_decode(v["image_png_base64"].get<std::string>());
      Image style;
      try {
        style = decode_png(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size());
      } catch (const Error& e) {
        throw ParamError("style.image_png_base64", e.what());
      }
      name = "image";
      return estimate_from_scene(*base_, style);
    }
    throw ParamError("style", "expected one of preset, transform, image_png_base64");
  }

 public:
  /// Estimates a full-covariance transform from a content frame rendered on a default orbit.
  static ColorTransform estimate_from_scene(const GaussianScene& scene, const Image& style) {
    const Camera cam = orbit_camera(scene.bounds(), 30.0, 25.0, 1.2, 256, 144);
    const FrameBuffer fb = rasterize(scene, cam);
    std::vector<Rgb> content;
    for (std::size_t i = 0; i < fb.pixel_count(); ++i)
      if (fb.alpha_acc[i] >= 0.5) content.push_back(fb.color[i]);
    if (content.size() < 16) throw ParamError("style", "content frame has too few covered pixels");
    return estimate_transform(content, style.pixels, EstimateMethod::FullCovariance);
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const GaussianScene> base_;
  std::optional<ColorTransform> transform_;
  std::string style_name_;
  ClimateParams climate_;
  std::uint64_t last_frame_id_ = 0;
  std::map<std::string, std::vector<Gaussian>> snow_cache_;
  std::size_t snow_hits_ = 0;
  std::size_t snow_misses_ = 0;
};

}  // namespace climategs
