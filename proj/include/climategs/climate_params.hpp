#pragma once

// Climate parameter document:
//   {"smog":  {"color": [r,g,b], "density": x},
//    "water": {"origin": [..], "normal": [..], "level": h, "ior": n, "absorption": [..],
//              "deep_color": [..], "shallow_color": [..], "sky_color": [..],
//              "waves": [{"direction": [dx, dz], "wavelength": l, "steepness": q,
//                         "phase_speed": c, "phase0": p}]},
//    "snow":  {"thickness": t, "grid_spacing": g, "up": [..], "min_up_dot": m,
//              "albedo": [..], "wrap": w, "light_dir": [..]}}
// Every field is optional; a partial document is merged over existing values.

#include "climategs/flood.hpp"
#include "climategs/smog.hpp"
#include "climategs/snow.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace climategs {

struct ClimateParams {
  SmogParams smog;
  WaterParams water;
  SnowParams snow;
};

namespace detail {

inline Vec3 param_vec3(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ParamError(field, "expected an array of 3 numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw ParamError(field, "expected an array of 3 numbers");
    v[k] = j[k].get<double>();
  }
  if (!v.allFinite()) throw ParamError(field, "must be finite");
  return v;
}

inline Vec3 param_unit3(const nlohmann::json& j, const std::string& field) {
  const Vec3 v = param_vec3(j, field);
  if (v.norm() < 1e-9) throw ParamError(field, "must be a non-zero vector");
  return v.normalized();
}

inline double param_number(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) throw ParamError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParamError(field, "must be finite");
  return v;
}

inline Rgb param_color(const nlohmann::json& j, const std::string& field) {
  const Rgb c = param_vec3(j, field);
  if ((c.array() < 0.0).any()) throw ParamError(field, "color components must be >= 0");
  return c;
}

inline void require_object(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object()) throw ParamError(field, "expected an object");
}

inline nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

inline void validate_climate(const ClimateParams& p) {
  if (!(p.smog.density >= 0.0)) throw ParamError("smog.density", "must be >= 0");
  if ((p.smog.color.array() < 0.0).any()) throw ParamError("smog.color", "color components must be >= 0");
  if (!(p.water.ior > 1.0)) throw ParamError("water.ior", "must be > 1");
  if ((p.water.absorption.array() < 0.0).any()) throw ParamError("water.absorption", "must be >= 0");
  if (const auto why = validate_waves(p.water.waves); !why.empty()) throw ParamError("water.waves", why);
  if (!(p.snow.thickness >= 0.0)) throw ParamError("snow.thickness", "must be >= 0");
  if (!(p.snow.grid_spacing > 0.0)) throw ParamError("snow.grid_spacing", "must be > 0");
  if (!(p.snow.min_up_dot >= 0.0 && p.snow.min_up_dot <= 1.0)) throw ParamError("snow.min_up_dot", "must be in [0,1]");
  if (!(p.snow.wrap >= 0.0 && p.snow.wrap <= 1.0)) throw ParamError("snow.wrap", "must be in [0,1]");
}

/// Returns `base` with the fields present in `doc` replaced. Throws ParamError
/// naming the first offending field; `base` is never modified.
inline ClimateParams merge_climate(const ClimateParams& base, const nlohmann::json& doc) {
  using namespace detail;
  require_object(doc, "climate");
  ClimateParams p = base;
  for (const auto& [section, body] : doc.items()) {
    if (section == "smog") {
      require_object(body, "smog");
      for (const auto& [k, v] : body.items()) {
        const std::string f = "smog." + k;
        if (k == "color") p.smog.color = param_color(v, f);
        else if (k == "density") p.smog.density = param_number(v, f);
        else throw ParamError(f, "unknown key");
      }
    } else if (section == "water") {
      require_object(body, "water");
      for (const auto& [k, v] : body.items()) {
        const std::string f = "water." + k;
        if (k == "origin") p.water.origin = param_vec3(v, f);
        else if (k == "normal") p.water.normal = param_unit3(v, f);
        else if (k == "level") p.water.level = param_number(v, f);
        else if (k == "ior") p.water.ior = param_number(v, f);
        else if (k == "absorption") p.water.absorption = param_vec3(v, f);
        else if (k == "deep_color") p.water.deep_color = param_color(v, f);
        else if (k == "shallow_color") p.water.shallow_color = param_color(v, f);
        else if (k == "sky_color") p.water.sky_color = param_color(v, f);
        else if (k == "waves") {
          if (!v.is_array()) throw ParamError(f, "expected an array");
          std::vector<GerstnerWave> waves;
          for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string wf = f + "[" + std::to_string(i) + "]";
            require_object(v[i], wf);
            GerstnerWave w;
            for (const auto& [wk, wv] : v[i].items()) {
              const std::string ff = wf + "." + wk;
              if (wk == "direction") {
                if (!wv.is_array() || wv.size() != 2 || !wv[0].is_number() || !wv[1].is_number())
                  throw ParamError(ff, "expected an array of 2 numbers");
                const Vec2 d(wv[0].get<double>(), wv[1].get<double>());
                if (d.norm() < 1e-9) throw ParamError(ff, "must be a non-zero vector");
                w.direction = d.normalized();
              } else if (wk == "wavelength") w.wavelength = param_number(wv, ff);
              else if (wk == "steepness") w.steepness = param_number(wv, ff);
              else if (wk == "phase_speed") w.phase_speed = param_number(wv, ff);
              else if (wk == "phase0") w.phase0 = param_number(wv, ff);
              else throw ParamError(ff, "unknown key");
            }
            if (!(w.wavelength > 0.0)) throw ParamError(wf + ".wavelength", "must be > 0");
            if (!(w.steepness >= 0.0 && w.steepness <= 1.0)) throw ParamError(wf + ".steepness", "must be in [0,1]");
            waves.push_back(w);
          }
          p.water.waves = std::move(waves);
        } else throw ParamError(f, "unknown key");
      }
    } else if (section == "snow") {
      require_object(body, "snow");
      for (const auto& [k, v] : body.items()) {
        const std::string f = "snow." + k;
        if (k == "thickness") p.snow.thickness = param_number(v, f);
        else if (k == "grid_spacing") p.snow.grid_spacing = param_number(v, f);
        else if (k == "up") p.snow.up = param_unit3(v, f);
        else if (k == "min_up_dot") p.snow.min_up_dot = param_number(v, f);
        else if (k == "albedo") p.snow.albedo = param_color(v, f);
        else if (k == "wrap") p.snow.wrap = param_number(v, f);
        else if (k == "light_dir") p.snow.light_dir = param_unit3(v, f);
        else throw ParamError(f, "unknown key");
      }
    } else {
      throw ParamError(section, "unknown section");
    }
  }
  validate_climate(p);
  return p;
}

inline nlohmann::json climate_to_json(const ClimateParams& p) {
  using detail::vec_json;
  nlohmann::json waves = nlohmann::json::array();
  for (const auto& w : p.water.waves) {
    nlohmann::json j = {{"direction", {w.direction.x(), w.direction.y()}},
                        {"wavelength", w.wavelength},
                        {"steepness", w.steepness},
                        {"phase0", w.phase0}};
    if (w.phase_speed) j["phase_speed"] = *w.phase_speed;
    waves.push_back(j);
  }
  return {
      {"smog", {{"color", vec_json(p.smog.color)}, {"density", p.smog.density}}},
      {"water",
       {{"origin", vec_json(p.water.origin)},
        {"normal", vec_json(p.water.normal)},
        {"level", p.water.level},
        {"ior", p.water.ior},
        {"absorption", vec_json(p.water.absorption)},
        {"deep_color", vec_json(p.water.deep_color)},
        {"shallow_color", vec_json(p.water.shallow_color)},
        {"sky_color", vec_json(p.water.sky_color)},
        {"waves", waves}}},
      {"snow",
       {{"thickness", p.snow.thickness},
        {"grid_spacing", p.snow.grid_spacing},
        {"up", vec_json(p.snow.up)},
        {"min_up_dot", p.snow.min_up_dot},
        {"albedo", vec_json(p.snow.albedo)},
        {"wrap", p.snow.wrap},
        {"light_dir", vec_json(p.snow.light_dir)}}},
  };
}

/// Sets a numeric field addressed by a dotted path ("smog.density", "water.waves.0.steepness").
inline ClimateParams with_climate_value(const ClimateParams& base, const std::string& path, double value) {
  nlohmann::json doc = climate_to_json(base);
  nlohmann::json::json_pointer ptr;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ParamError(path, "malformed parameter path");
    ptr /= part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!doc.contains(ptr) || !doc.at(ptr).is_number()) throw ParamError(path, "not a numeric climate parameter");
  doc[ptr] = value;
  return merge_climate(ClimateParams{}, doc);
}

inline ClimateParams load_climate(const std::string& path, const ClimateParams& base = {}) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open climate file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("climate file '" + path + "': " + e.what());
  }
  return merge_climate(base, doc);
}

}  // namespace climategs
