#pragma once

// Procedural test scenes: planes, spheres and boxes tiled with flat Gaussians,
// plus optional clouds of faint floaters. The generator keeps the analytic
// primitives so exact surface depths can be queried for any camera ray.

#include "climategs/rasterizer.hpp"

#include <nlohmann/json.hpp>

#include <random>
#include <variant>

namespace climategs {

struct PlanePrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitY();
  Vec2 size = Vec2(10.0, 10.0);  // extent along the in-plane basis
  double spacing = 0.25;
  Rgb color = Rgb(0.5, 0.5, 0.5);
  double opacity = 0.99;
};

struct SpherePrimitive {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  int count = 2000;
  Rgb color = Rgb(0.6, 0.3, 0.2);
  double opacity = 0.99;
};

struct BoxPrimitive {
  Vec3 min = Vec3(-0.5, 0.0, -0.5);
  Vec3 max = Vec3(0.5, 1.0, 0.5);
  double spacing = 0.1;
  Rgb color = Rgb(0.3, 0.4, 0.6);
  double opacity = 0.99;
};

/// Faint isotropic blobs; never part of the ground-truth surface.
struct FloaterCloud {
  Vec3 min = Vec3(-1.0, 1.0, -1.0);
  Vec3 max = Vec3(1.0, 2.0, 1.0);
  int count = 20;
  double scale = 0.05;
  double opacity_min = 0.05;
  double opacity_max = 0.25;
  Rgb color = Rgb(0.8, 0.8, 0.8);
};

using Primitive = std::variant<PlanePrimitive, SpherePrimitive, BoxPrimitive, FloaterCloud>;

struct SyntheticSpec {
  std::vector<Primitive> primitives;
  std::uint64_t seed = 1;
  double color_jitter = 0.0;  // uniform +- per channel on each Gaussian's base color
  double sh_noise = 0.0;      // uniform +- on higher-order SH coefficients
  int sh_degree = 3;
};

namespace detail {

inline std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
  const Vec3 a = (seed - seed.dot(n) * n).normalized();
  return {a, a.cross(n)};
}

// Rotation whose local y axis is `n`.
inline Quat frame_for_normal(const Vec3& n) {
  const auto [a, b] = tangent_basis(n);
  Mat3 m;
  m.col(0) = a;
  m.col(1) = n;
  m.col(2) = b;
  return Quat(m);
}

inline double ray_plane_rect(const Vec3& o, const Vec3& d, const PlanePrimitive& p) {
  const double den = p.normal.dot(d);
  if (std::abs(den) < 1e-12) return INFINITY;
  const double t = p.normal.dot(p.center - o) / den;
  if (t <= 0.0) return INFINITY;
  const auto [a, b] = tangent_basis(p.normal);
  const Vec3 q = o + t * d - p.center;
  if (std::abs(a.dot(q)) > 0.5 * p.size.x() || std::abs(b.dot(q)) > 0.5 * p.size.y()) return INFINITY;
  return t;
}

inline double ray_sphere(const Vec3& o, const Vec3& d, const SpherePrimitive& s) {
  const Vec3 oc = o - s.center;
  const double b = oc.dot(d), c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return INFINITY;
  const double sq = std::sqrt(disc);
  if (-b - sq > 0.0) return -b - sq;
  if (-b + sq > 0.0) return -b + sq;
  return INFINITY;
}

inline double ray_box(const Vec3& o, const Vec3& d, const BoxPrimitive& bx) {
  double t0 = -INFINITY, t1 = INFINITY;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < bx.min[a] || o[a] > bx.max[a]) return INFINITY;
      continue;
    }
    double ta = (bx.min[a] - o[a]) / d[a], tb = (bx.max[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t1 < t0) return INFINITY;
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return INFINITY;
}

}  // namespace detail

class SyntheticScene {
 public:
  SyntheticScene(GaussianScene scene, std::vector<Primitive> prims)
      : scene_(std::move(scene)), prims_(std::move(prims)) {}

  const GaussianScene& scene() const { return scene_; }
  const std::vector<Primitive>& primitives() const { return prims_; }

  /// Distance along the unit world ray to the nearest solid surface; +inf on a miss.
  double ray_depth(const Vec3& origin, const Vec3& dir) const {
    double best = INFINITY;
    for (const auto& p : prims_) {
      double t = INFINITY;
      if (const auto* pl = std::get_if<PlanePrimitive>(&p)) t = detail::ray_plane_rect(origin, dir, *pl);
      else if (const auto* sp = std::get_if<SpherePrimitive>(&p)) t = detail::ray_sphere(origin, dir, *sp);
      else if (const auto* bx = std::get_if<BoxPrimitive>(&p)) t = detail::ray_box(origin, dir, *bx);
      best = std::min(best, t);
    }
    return best;
  }

  /// Ground-truth view depth (z) per pixel center; +inf where no surface is hit.
  std::vector<double> depth_map(const Camera& cam) const {
    std::vector<double> out(std::size_t(cam.width) * cam.height);
    const Vec3 o = cam.position();
    const Mat3 rt = cam.rotation.transpose();
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const Vec3 dv = cam.pixel_ray(pixel_center(x, y)).normalized();
        out[std::size_t(y) * cam.width + x] = ray_depth(o, rt * dv) * dv.z();
      }
    return out;
  }

 private:
  GaussianScene scene_;
  std::vector<Primitive> prims_;
};

inline SyntheticScene generate_synthetic_scene(const SyntheticSpec& spec) {
  if (spec.primitives.empty()) throw Error("synthetic scene spec has no primitives");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Gaussian> out;

  auto emit = [&](const Vec3& c, const Quat& q, const Vec3& scale, double opacity, const Rgb& color) {
    Gaussian g;
    g.center = c;
    g.rotation = q;
    g.scale = scale;
    g.opacity = opacity;
    Rgb col = color;
    if (spec.color_jitter > 0.0)
      for (int k = 0; k < 3; ++k) col[k] += spec.color_jitter * unit(rng);
    g.sh[0] = dc_from_color(col);
    if (spec.sh_noise > 0.0)
      for (int k = 1; k < sh::coeff_count(spec.sh_degree); ++k)
        g.sh[k] = spec.sh_noise * Vec3(unit(rng), unit(rng), unit(rng));
    out.push_back(g);
  };

  auto tile_rect = [&](const Vec3& center, const Vec3& n, const Vec2& size, double spacing, double opacity,
                       const Rgb& color) {
    if (!(spacing > 0.0)) throw Error("synthetic: spacing must be > 0");
    const auto [a, b] = detail::tangent_basis(n);
    const Quat q = detail::frame_for_normal(n);
    const int nu = std::max(1, int(std::round(size.x() / spacing))) + 1;
    const int nv = std::max(1, int(std::round(size.y() / spacing))) + 1;
    const double du = size.x() / (nu - 1), dv = size.y() / (nv - 1);
    const Vec3 scale(du, std::max(1e-4, 0.02 * spacing), dv);
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nu; ++i)
        emit(center + (-0.5 * size.x() + i * du) * a + (-0.5 * size.y() + j * dv) * b, q, scale, opacity, color);
  };

  for (const auto& prim : spec.primitives) {
    if (const auto* p = std::get_if<PlanePrimitive>(&prim)) {
      tile_rect(p->center, p->normal.normalized(), p->size, p->spacing, p->opacity, p->color);
    } else if (const auto* s = std::get_if<SpherePrimitive>(&prim)) {
      if (s->count < 1 || !(s->radius > 0.0)) throw Error("synthetic: sphere needs count >= 1 and radius > 0");
      const double footprint = s->radius * std::sqrt(4.0 * M_PI / s->count);
      const double golden = M_PI * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < s->count; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / s->count;
        const double r = std::sqrt(1.0 - y * y);
        const Vec3 n(r * std::cos(golden * i), y, r * std::sin(golden * i));
        emit(s->center + s->radius * n, detail::frame_for_normal(n),
             Vec3(footprint, std::max(1e-4, 0.02 * footprint), footprint), s->opacity, s->color);
      }
    } else if (const auto* b = std::get_if<BoxPrimitive>(&prim)) {
      const Vec3 c = 0.5 * (b->min + b->max), e = b->max - b->min;
      for (int axis = 0; axis < 3; ++axis)
        for (const double sign : {-1.0, 1.0}) {
          Vec3 n = Vec3::Zero();
          n[axis] = sign;
          const auto [ta, tb] = detail::tangent_basis(n);
          const Vec2 size(std::abs(ta.dot(e)), std::abs(tb.dot(e)));
          tile_rect(c + 0.5 * e[axis] * n, n, size, b->spacing, b->opacity, b->color);
        }
    } else if (const auto* f = std::get_if<FloaterCloud>(&prim)) {
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      for (int i = 0; i < f->count; ++i) {
        const Vec3 c(f->min.x() + u01(rng) * (f->max.x() - f->min.x()),
                     f->min.y() + u01(rng) * (f->max.y() - f->min.y()),
                     f->min.z() + u01(rng) * (f->max.z() - f->min.z()));
        const double op = f->opacity_min + u01(rng) * (f->opacity_max - f->opacity_min);
        emit(c, Quat::Identity(), Vec3::Constant(f->scale), op, f->color);
      }
    }
  }
  return {GaussianScene(std::move(out), spec.sh_degree), spec.primitives};
}

/// Named scenes used by the CLI, the tests and the benchmarks. `gaussians`
/// sets the approximate size of the "bench" scene.
inline SyntheticSpec synthetic_preset(const std::string& name, std::uint64_t seed = 1, int gaussians = 50000) {
  SyntheticSpec spec;
  spec.seed = seed;
  PlanePrimitive ground;
  ground.center = Vec3::Zero();
  ground.normal = Vec3::UnitY();
  ground.size = Vec2(10.0, 10.0);
  ground.spacing = 0.25;
  ground.color = Rgb(0.45, 0.42, 0.38);
  if (name == "plane") {
    spec.primitives = {ground};
  } else if (name == "floaters") {
    FloaterCloud cloud;
    cloud.min = Vec3(-4.5, 0.6, -4.5);
    cloud.max = Vec3(4.5, 1.8, 4.5);
    cloud.count = 60;
    cloud.scale = 0.08;
    spec.primitives = {ground, cloud};
  } else if (name == "sphere") {
    SpherePrimitive s;
    s.center = Vec3(0.0, 1.0, 0.0);
    spec.primitives = {ground, s};
  } else if (name == "wall") {
    PlanePrimitive wall;
    wall.center = Vec3(0.0, 2.0, 0.0);
    wall.normal = Vec3::UnitZ();
    wall.size = Vec2(10.0, 4.0);
    wall.color = Rgb(0.6, 0.35, 0.3);
    spec.primitives = {wall};
  } else if (name == "street") {
    spec.color_jitter = 0.06;
    spec.sh_noise = 0.02;
    BoxPrimitive left, right;
    left.min = Vec3(-4.5, 0.0, -4.5);
    left.max = Vec3(-2.0, 3.0, 1.0);
    left.color = Rgb(0.55, 0.35, 0.28);
    right.min = Vec3(2.0, 0.0, -4.5);
    right.max = Vec3(4.5, 2.0, 0.5);
    right.color = Rgb(0.3, 0.38, 0.55);
    SpherePrimitive tree;
    tree.center = Vec3(0.5, 1.2, -1.5);
    tree.radius = 0.8;
    tree.color = Rgb(0.2, 0.45, 0.2);
    spec.primitives = {ground, left, right, tree};
  } else if (name == "bench") {
    if (gaussians < 100) throw Error("synthetic: bench scene needs at least 100 Gaussians");
    spec.color_jitter = 0.08;
    spec.sh_noise = 0.03;
    const double side = std::sqrt(gaussians / 2.0);
    ground.spacing = 10.0 / std::max(1.0, side - 1.0);
    SpherePrimitive a, b;
    a.center = Vec3(-2.0, 1.0, 0.0);
    b.center = Vec3(2.0, 1.0, 0.5);
    b.color = Rgb(0.25, 0.35, 0.6);
    const int plane_count = int(std::pow(std::round(10.0 / ground.spacing) + 1.0, 2.0));
    a.count = std::max(1, (gaussians - plane_count) / 2);
    b.count = std::max(1, gaussians - plane_count - a.count);
    spec.primitives = {ground, a, b};
  } else {
    throw ParamError("preset", "unknown synthetic preset '" + name + "'");
  }
  return spec;
}

// JSON form used by the CLI:
//   {"seed": 1, "color_jitter": 0.05, "sh_noise": 0, "sh_degree": 3,
//    "primitives": [{"type": "plane", "center": [..], "normal": [..], "size": [w, h], "spacing": s,
//                    "color": [..], "opacity": a}, {"type": "sphere", ...}, {"type": "box", ...},
//                   {"type": "floaters", ...}]}
namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ParamError(field, "expected 3 numbers");
  for (const auto& v : j)
    if (!v.is_number()) throw ParamError(field, "expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Vec2 json_vec2(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParamError(field, "expected 2 numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline double json_number(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) throw ParamError(field, "expected a number");
  return j.get<double>();
}

}  // namespace detail

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc) {
  using detail::json_number;
  using detail::json_vec2;
  using detail::json_vec3;
  if (!doc.is_object()) throw ParamError("synthetic", "document must be an object");
  SyntheticSpec spec;
  for (const auto& [key, val] : doc.items()) {
    if (key == "seed") spec.seed = std::uint64_t(json_number(val, key));
    else if (key == "color_jitter") spec.color_jitter = json_number(val, key);
    else if (key == "sh_noise") spec.sh_noise = json_number(val, key);
    else if (key == "sh_degree") spec.sh_degree = int(json_number(val, key));
    else if (key == "primitives") {
      if (!val.is_array()) throw ParamError(key, "expected an array");
      for (std::size_t i = 0; i < val.size(); ++i) {
        const auto& p = val[i];
        const std::string at = "primitives[" + std::to_string(i) + "]";
        if (!p.is_object() || !p.contains("type") || !p["type"].is_string()) throw ParamError(at, "missing 'type'");
        const std::string type = p["type"];
        auto reject = [&](const std::string& k) { throw ParamError(at + "." + k, "unknown key for " + type); };
        if (type == "plane") {
          PlanePrimitive q;
          for (const auto& [k, v] : p.items()) {
            const std::string f = at + "." + k;
            if (k == "type") continue;
            if (k == "center") q.center = json_vec3(v, f);
            else if (k == "normal") q.normal = json_vec3(v, f).normalized();
            else if (k == "size") q.size = json_vec2(v, f);
            else if (k == "spacing") q.spacing = json_number(v, f);
            else if (k == "color") q.color = json_vec3(v, f);
            else if (k == "opacity") q.opacity = json_number(v, f);
            else reject(k);
          }
          spec.primitives.emplace_back(q);
        } else if (type == "sphere") {
          SpherePrimitive q;
          for (const auto& [k, v] : p.items()) {
            const std::string f = at + "." + k;
            if (k == "type") continue;
            if (k == "center") q.center = json_vec3(v, f);
            else if (k == "radius") q.radius = json_number(v, f);
            else if (k == "count") q.count = int(json_number(v, f));
            else if (k == "color") q.color = json_vec3(v, f);
            else if (k == "opacity") q.opacity = json_number(v, f);
            else reject(k);
          }
          spec.primitives.emplace_back(q);
        } else if (type == "box") {
          BoxPrimitive q;
          for (const auto& [k, v] : p.items()) {
            const std::string f = at + "." + k;
            if (k == "type") continue;
            if (k == "min") q.min = json_vec3(v, f);
            else if (k == "max") q.max = json_vec3(v, f);
            else if (k == "spacing") q.spacing = json_number(v, f);
            else if (k == "color") q.color = json_vec3(v, f);
            else if (k == "opacity") q.opacity = json_number(v, f);
            else reject(k);
          }
          spec.primitives.emplace_back(q);
        } else if (type == "floaters") {
          FloaterCloud q;
          for (const auto& [k, v] : p.items()) {
            const std::string f = at + "." + k;
            if (k == "type") continue;
            if (k == "min") q.min = json_vec3(v, f);
            else if (k == "max") q.max = json_vec3(v, f);
            else if (k == "count") q.count = int(json_number(v, f));
            else if (k == "scale") q.scale = json_number(v, f);
            else if (k == "opacity_min") q.opacity_min = json_number(v, f);
            else if (k == "opacity_max") q.opacity_max = json_number(v, f);
            else if (k == "color") q.color = json_vec3(v, f);
            else reject(k);
          }
          spec.primitives.emplace_back(q);
        } else {
          throw ParamError(at + ".type", "unknown primitive '" + type + "'");
        }
      }
    } else {
      throw ParamError(key, "unknown key");
    }
  }
  return spec;
}

}  // namespace climategs
