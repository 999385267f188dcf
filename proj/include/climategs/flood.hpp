#pragma once

// Flood pass: the camera ray is intersected with a wave-displaced water plane;
// where the scene lies beyond the water, the pixel is replaced by a Fresnel
// blend of a screen-space reflection and an absorbed refraction.

#include "climategs/gerstner.hpp"
#include "climategs/rasterizer.hpp"

#include <cstdint>

namespace climategs {

struct WaterParams {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitY();
  double level = 0.0;  // offset of the plane along the normal
  std::vector<GerstnerWave> waves;
  Rgb deep_color = Rgb(0.02, 0.08, 0.12);
  Rgb shallow_color = Rgb(0.10, 0.30, 0.32);
  Rgb sky_color = Rgb(0.55, 0.65, 0.75);  // reflection fallback when the march misses
  double ior = 1.33;
  Rgb absorption = Rgb(0.45, 0.09, 0.06);  // per world unit

  Vec3 plane_point() const { return origin + level * normal; }
};

/// Schlick approximation: R0 + (1 - R0)(1 - cos)^5, R0 = ((1 - n) / (1 + n))^2.
inline double schlick_fresnel(double cos_theta, double ior) {
  const double r0 = std::pow((1.0 - ior) / (1.0 + ior), 2.0);
  const double c = std::clamp(cos_theta, 0.0, 1.0);
  const double m = 1.0 - c;
  return r0 + (1.0 - r0) * m * m * m * m * m;
}

struct SsrOptions {
  int steps = 64;            // upper bound; short segments take one step per pixel
  double bias = 0.05;        // accepted depth overshoot at a hit, world units
  int refine_steps = 8;
  double max_distance = -1;  // <= 0 uses the camera far plane
};

struct SsrResult {
  Rgb color = Rgb::Zero();
  bool hit = false;
  Vec2 pixel = Vec2::Zero();
};

/// Inverse view depth per pixel, 0 for sky; the march compares 1/z along the ray
/// against it. `levels[l]` holds the largest inverse depth (nearest surface) of
/// each 2^l x 2^l block, so a stretch of ray farther than that value over its
/// pixel bounding box cannot hit.
struct SsrDepth {
  struct Level {
    int width;
    int height;
    std::vector<double> max_inv;
  };
  int width = 0;
  int height = 0;
  std::vector<double> inv_depth;
  std::vector<Level> levels;

  explicit SsrDepth(const FrameBuffer& fb) : width(fb.width), height(fb.height), inv_depth(fb.pixel_count(), 0.0) {
    for (std::size_t i = 0; i < inv_depth.size(); ++i)
      if (!fb.is_sky(i)) inv_depth[i] = 1.0 / fb.surface_depth(i);
    levels.push_back({width, height, inv_depth});
    while (levels.back().width > 1 || levels.back().height > 1) {
      const Level& f = levels.back();
      Level c{(f.width + 1) / 2, (f.height + 1) / 2, {}};
      c.max_inv.assign(std::size_t(c.width) * std::size_t(c.height), 0.0);
      for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
          double& m = c.max_inv[std::size_t(y / 2) * std::size_t(c.width) + std::size_t(x / 2)];
          m = std::max(m, f.max_inv[std::size_t(y) * std::size_t(f.width) + std::size_t(x)]);
        }
      levels.push_back(std::move(c));
    }
  }

  /// Upper bound of inv_depth over the pixel rectangle [x0, x1] x [y0, y1].
  double max_over(int x0, int y0, int x1, int y1) const {
    std::size_t l = 0;
    while (l + 1 < levels.size() && ((x1 >> l) - (x0 >> l) > 1 || (y1 >> l) - (y0 >> l) > 1)) ++l;
    const Level& v = levels[l];
    double m = 0.0;
    for (int y = y0 >> l; y <= (y1 >> l); ++y)
      for (int x = x0 >> l; x <= (x1 >> l); ++x)
        m = std::max(m, v.max_inv[std::size_t(y) * std::size_t(v.width) + std::size_t(x)]);
    return m;
  }
};

/// Marches a view-space ray through the depth buffer in screen space.
inline SsrResult ssr_trace(const SsrDepth& depth, const std::vector<Rgb>& color, const Camera& cam,
                           const Vec3& origin_view, const Vec3& dir_view, const Rgb& fallback,
                           const SsrOptions& opt = {}) {
  SsrResult miss{fallback, false, Vec2::Zero()};
  if (origin_view.z() <= cam.near) return miss;
  double t_end = opt.max_distance > 0 ? opt.max_distance : cam.far;
  if (dir_view.z() < 0.0) t_end = std::min(t_end, 0.999 * (cam.near - origin_view.z()) / dir_view.z());
  if (!(t_end > 0.0)) return miss;
  const Vec3 end_view = origin_view + t_end * dir_view;
  const Vec2 p0 = cam.project(origin_view), p1 = cam.project(end_view);
  const double iz0 = 1.0 / origin_view.z(), diz = 1.0 / end_view.z() - iz0;

  // Clip the screen segment p0 + s (p1 - p0), s in [0,1], to the viewport.
  double s_lo = 0.0, s_hi = 1.0;
  const Vec2 dp = p1 - p0;
  const double hi[2] = {double(depth.width), double(depth.height)};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(dp[a]) < 1e-12) {
      if (p0[a] < 0.0 || p0[a] >= hi[a]) return miss;
      continue;
    }
    double s0 = -p0[a] / dp[a], s1 = (hi[a] - p0[a]) / dp[a];
    if (s0 > s1) std::swap(s0, s1);
    s_lo = std::max(s_lo, s0);
    s_hi = std::min(s_hi, s1);
  }
  if (s_lo > 0.0 || s_hi <= s_lo) return miss;  // origin off screen or segment empty
  s_hi *= 1.0 - 1e-12;

  const int wmax = depth.width - 1, hmax = depth.height - 1;
  auto pixel_at = [&](double s) {
    return std::pair<int, int>(std::clamp(int(p0.x() + s * dp.x()), 0, wmax), std::clamp(int(p0.y() + s * dp.y()), 0, hmax));
  };
  auto index_at = [&](double s) {
    const auto [px, py] = pixel_at(s);
    return std::size_t(py) * std::size_t(depth.width) + std::size_t(px);
  };
  // Behind the surface: ray depth >= buffer depth, i.e. 1/z_ray <= 1/z_buffer.
  auto behind = [&](double s) { return iz0 + s * diz <= depth.inv_depth[index_at(s)]; };

  const int steps = std::clamp(int(std::ceil(s_hi * dp.norm())), 1, std::max(1, opt.steps));
  if (opt.steps <= 0) return miss;
  const double ds = s_hi / steps;

  // Samples s_i = i ds, i = 1..steps, in order. A range of samples is skipped
  // when its farthest point is nearer than every surface in its pixel bounding
  // box; pixel coordinates are monotone in s, so the endpoints bound the box.
  SsrResult found = miss;
  auto test_sample = [&](int i) {
    const double s = ds * i;
    if (!behind(s)) return false;
    double a = ds * (i - 1), b = s;
    for (int r = 0; r < opt.refine_steps; ++r) {
      const double m = 0.5 * (a + b);
      if (behind(m)) b = m;
      else a = m;
    }
    const std::size_t idx = index_at(b);
    const double ray_z = 1.0 / (iz0 + b * diz);
    const double buf_z = 1.0 / depth.inv_depth[idx];
    if (ray_z - buf_z > opt.bias) return false;
    const auto px = idx % std::size_t(depth.width), py = idx / std::size_t(depth.width);
    found = {color[idx], true, Vec2(double(px) + 0.5, double(py) + 0.5)};
    return true;
  };
  auto search = [&](auto&& self, int lo, int hi) -> bool {
    const double sa = ds * lo, sb = ds * hi;
    const auto [xa, ya] = pixel_at(sa);
    const auto [xb, yb] = pixel_at(sb);
    const double far_iz = std::min(iz0 + sa * diz, iz0 + sb * diz);
    if (far_iz > depth.max_over(std::min(xa, xb), std::min(ya, yb), std::max(xa, xb), std::max(ya, yb))) return false;
    if (hi - lo < 4) {
      for (int i = lo; i <= hi; ++i)
        if (test_sample(i)) return true;
      return false;
    }
    const int mid = lo + (hi - lo) / 2;
    return self(self, lo, mid) || self(self, mid + 1, hi);
  };
  if (search(search, 1, steps)) return found;
  return miss;
}

inline SsrResult ssr_trace(const FrameBuffer& fb, const Camera& cam, const Vec3& origin_view, const Vec3& dir_view,
                           const Rgb& fallback, const SsrOptions& opt = {}) {
  return ssr_trace(SsrDepth(fb), fb.color, cam, origin_view, dir_view, fallback, opt);
}

/// Per-pixel record of the flood pass, used to check energy conservation.
struct FloodReport {
  std::vector<std::uint8_t> water;
  std::vector<double> reflect_weight;
  std::vector<double> refract_weight;
  std::size_t water_pixels = 0;
  std::size_t ssr_hits = 0;
};

inline std::string validate_water(const WaterParams& w) {
  if (std::abs(w.normal.norm() - 1.0) > 1e-6) return "water.normal must be unit length";
  if (!(w.ior > 1.0)) return "water.ior must be > 1";
  if (!(w.absorption.array() >= 0.0).all()) return "water.absorption must be >= 0";
  return validate_waves(w.waves);
}

inline FrameBuffer apply_flood(const FrameBuffer& fb, const Camera& cam, const WaterParams& w, double time,
                               FloodReport* report = nullptr, const SsrOptions& ssr = {}) {
  if (fb.depth.size() != fb.pixel_count() || fb.color.size() != fb.pixel_count())
    throw Error("apply_flood: frame has no depth/color buffers");
  if (const auto why = validate_water(w); !why.empty()) throw ParamError("water", why);
  FrameBuffer out = fb;
  if (report) {
    report->water.assign(fb.pixel_count(), 0);
    report->reflect_weight.assign(fb.pixel_count(), 0.0);
    report->refract_weight.assign(fb.pixel_count(), 0.0);
    report->water_pixels = report->ssr_hits = 0;
  }
  const Vec3 n = w.normal;
  const Vec3 o = w.plane_point();
  const Vec3 cam_pos = cam.position();
  const double cam_height = n.dot(cam_pos - o);
  if (cam_height <= 0.0) return out;  // camera below the water plane: not handled

  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
  const Vec3 ex = (seed - seed.dot(n) * n).normalized();
  const Vec3 ez = ex.cross(n);
  const Mat3 rt = cam.rotation.transpose();
  const double eta = 1.0 / w.ior;
  const WaveField field(w.waves, time);
  const double r0 = schlick_fresnel(1.0, w.ior);
  const SsrDepth ssr_depth(fb);

  std::vector<std::size_t> row_ssr(std::size_t(fb.height), 0), row_water(std::size_t(fb.height), 0);
  parallel_for(std::size_t(fb.height), [&](std::size_t yy) {
    const int y = int(yy);
    for (int x = 0; x < fb.width; ++x) {
      const std::size_t i = fb.index(x, y);
      const Vec3 dv = cam.pixel_ray(pixel_center(x, y)).normalized();
      const Vec3 d = rt * dv;
      const double denom = n.dot(d);
      if (denom >= -1e-12) continue;

      double h = 0.0, t_w = 0.0;
      Vec2 xz = Vec2::Zero();
      for (int it = 0; it < 3 && !field.empty(); ++it) {
        t_w = (h - cam_height) / denom;
        const Vec3 rel = cam_pos + t_w * d - o;
        xz = Vec2(ex.dot(rel), ez.dot(rel));
        const double next = field.height(xz);
        if (std::abs(next - h) < 1e-9) break;
        h = next;
      }
      t_w = (h - cam_height) / denom;
      if (t_w <= 0.0) continue;
      const double t_scene = fb.is_sky(i) ? std::numeric_limits<double>::infinity() : fb.surface_depth(i) / dv.z();
      if (!(t_scene > t_w)) continue;

      const Vec3 p = cam_pos + t_w * d;
      const Vec3 ln = field.normal(xz);
      const Vec3 nn = (ln.x() * ex + ln.y() * n + ln.z() * ez).normalized();
      const double cos_i = std::clamp(-d.dot(nn), 0.0, 1.0);
      const double m = 1.0 - cos_i;
      const double r = r0 + (1.0 - r0) * m * m * m * m * m;
      const double tr = 1.0 - r;

      Vec3 refl = d - 2.0 * d.dot(nn) * nn;
      if (refl.dot(n) < 0.0) refl -= 2.0 * refl.dot(n) * n;
      const Vec3 pv = cam.to_view(p);
      const SsrResult hit = ssr_trace(ssr_depth, fb.color, cam, pv, (cam.rotation * refl).normalized(), w.sky_color, ssr);

      const double under = t_scene - t_w;
      Rgb scene_c = fb.color[i];
      Rgb absorb = Rgb::Zero();
      if (std::isfinite(under)) {
        absorb = (-w.absorption * under).array().exp();
        const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
        if (k > 0.0) {
          const Vec3 refr = (eta * d + (eta * cos_i - std::sqrt(k)) * nn).normalized();
          const Vec3 qv = cam.to_view(p + under * refr);
          if (qv.z() > cam.near) {
            const Vec2 q = cam.project(qv);
            const int qx = int(std::floor(q.x())), qy = int(std::floor(q.y()));
            if (qx >= 0 && qy >= 0 && qx < fb.width && qy < fb.height) {
              const std::size_t qi = fb.index(qx, qy);
              if (!fb.is_sky(qi) && fb.surface_depth(qi) > pv.z()) scene_c = fb.color[qi];
            }
          }
        }
      }
      const Rgb body = w.shallow_color.cwiseProduct(absorb) + w.deep_color.cwiseProduct(Rgb::Ones() - absorb);
      const Rgb refracted = absorb.cwiseProduct(scene_c) + (Rgb::Ones() - absorb).cwiseProduct(body);

      out.color[i] = r * hit.color + tr * refracted;
      out.alpha_acc[i] = 1.0;
      out.depth[i] = pv.z();
      ++row_water[yy];
      if (hit.hit) ++row_ssr[yy];
      if (report) {
        report->water[i] = 1;
        report->reflect_weight[i] = r;
        report->refract_weight[i] = tr;
      }
    }
  });
  if (report) {
    for (std::size_t y = 0; y < row_water.size(); ++y) {
      report->water_pixels += row_water[y];
      report->ssr_hits += row_ssr[y];
    }
  }
  return out;
}

}  // namespace climategs
