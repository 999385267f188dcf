#pragma once

// Camera documents (JSON). Three forms are accepted:
//   {"eye": [..], "target": [..], "up": [0,1,0], "fov_y": 50}
//   {"azimuth": deg, "elevation": deg, "radius_scale": 1.5}      orbit around the scene bounds
//   {"rotation": [9, row-major world->view], "translation": [3], "focal": [fx, fy], "principal_point": [cx, cy]}
// Each may also carry "width", "height", "near", "far".

#include "climategs/gaussian.hpp"

#include <nlohmann/json.hpp>

namespace climategs {

namespace detail {

inline std::vector<double> camera_numbers(const nlohmann::json& j, const std::string& key, std::size_t n) {
  const std::string f = "camera." + key;
  if (!j.is_array() || j.size() != n) throw ParamError(f, "expected " + std::to_string(n) + " numbers");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw ParamError(f, "expected " + std::to_string(n) + " numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline double camera_scalar(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) throw ParamError("camera." + key, "expected a number");
  return j.get<double>();
}

}  // namespace detail

inline Camera camera_from_json(const nlohmann::json& doc, const Bounds& bounds, int width, int height) {
  using detail::camera_numbers;
  using detail::camera_scalar;
  if (!doc.is_object()) throw ParamError("camera", "expected an object");
  for (const auto& [k, _] : doc.items()) {
    static const char* known[] = {"eye", "target", "up", "fov_y", "azimuth", "elevation", "radius_scale",
                                  "rotation", "translation", "focal", "principal_point", "width", "height",
                                  "near", "far"};
    if (std::find(std::begin(known), std::end(known), k) == std::end(known))
      throw ParamError("camera." + k, "unknown key");
  }
  if (doc.contains("width")) width = int(camera_scalar(doc["width"], "width"));
  if (doc.contains("height")) height = int(camera_scalar(doc["height"], "height"));
  if (width < 1 || height < 1 || width > 8192 || height > 8192) throw ParamError("camera.width", "size out of range");

  const int forms = int(doc.contains("eye")) + int(doc.contains("azimuth")) + int(doc.contains("rotation"));
  if (forms != 1) throw ParamError("camera", "give exactly one of 'eye', 'azimuth' or 'rotation'");
  Camera cam;
  if (doc.contains("eye")) {
    const auto e = camera_numbers(doc["eye"], "eye", 3);
    if (!doc.contains("target")) throw ParamError("camera.target", "required with 'eye'");
    const auto t = camera_numbers(doc["target"], "target", 3);
    Vec3 up = Vec3::UnitY();
    if (doc.contains("up")) {
      const auto u = camera_numbers(doc["up"], "up", 3);
      up = Vec3(u[0], u[1], u[2]);
    }
    const double fov = doc.contains("fov_y") ? camera_scalar(doc["fov_y"], "fov_y") : 50.0;
    if (!(fov > 1.0 && fov < 179.0)) throw ParamError("camera.fov_y", "must be in (1, 179) degrees");
    const Vec3 eye(e[0], e[1], e[2]), target(t[0], t[1], t[2]);
    if ((eye - target).norm() < 1e-9) throw ParamError("camera.target", "must differ from eye");
    cam = Camera::look_at(eye, target, up, width, height, fov, 0.01, 1000.0);
  } else if (doc.contains("azimuth")) {
    const double az = camera_scalar(doc["azimuth"], "azimuth");
    const double el = doc.contains("elevation") ? camera_scalar(doc["elevation"], "elevation") : 25.0;
    const double rs = doc.contains("radius_scale") ? camera_scalar(doc["radius_scale"], "radius_scale") : 1.2;
    if (!(rs > 0.0)) throw ParamError("camera.radius_scale", "must be > 0");
    if (!(std::abs(el) < 89.9)) throw ParamError("camera.elevation", "must be in (-89.9, 89.9)");
    cam = orbit_camera(bounds, az, el, rs, width, height);
  } else {
    const auto r = camera_numbers(doc["rotation"], "rotation", 9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cam.rotation(i, j) = r[i * 3 + j];
    if (doc.contains("translation")) {
      const auto t = camera_numbers(doc["translation"], "translation", 3);
      cam.translation = Vec3(t[0], t[1], t[2]);
    }
    cam.width = width;
    cam.height = height;
    if (doc.contains("focal")) {
      const auto f = camera_numbers(doc["focal"], "focal", 2);
      cam.focal = Vec2(f[0], f[1]);
    } else {
      cam.focal = Vec2::Constant(0.5 * height / std::tan(25.0 * M_PI / 180.0));
    }
    if (doc.contains("principal_point")) {
      const auto c = camera_numbers(doc["principal_point"], "principal_point", 2);
      cam.principal_point = Vec2(c[0], c[1]);
    } else {
      cam.principal_point = Vec2(0.5 * width, 0.5 * height);
    }
  }
  if (doc.contains("near")) cam.near = camera_scalar(doc["near"], "near");
  if (doc.contains("far")) cam.far = camera_scalar(doc["far"], "far");
  if (const auto why = cam.validate(); !why.empty()) throw ParamError("camera", why);
  return cam;
}

inline nlohmann::json camera_to_json(const Camera& cam) {
  std::vector<double> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(cam.rotation(i, j));
  return {{"rotation", r},
          {"translation", {cam.translation.x(), cam.translation.y(), cam.translation.z()}},
          {"focal", {cam.focal.x(), cam.focal.y()}},
          {"principal_point", {cam.principal_point.x(), cam.principal_point.y()}},
          {"width", cam.width},
          {"height", cam.height},
          {"near", cam.near},
          {"far", cam.far}};
}

}  // namespace climategs
