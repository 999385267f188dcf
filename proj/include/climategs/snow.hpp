#pragma once

// Snow as geometry: flat Gaussians are dropped onto upward-facing surfaces by
// casting rays along -up, and shaded in a deferred pass from the normals the
// rasterizer writes into the snow G-buffer.

#include "climategs/gumbel.hpp"

namespace climategs {

struct SnowParams {
  double thickness = 0.05;
  double grid_spacing = 0.1;
  Vec3 up = Vec3::UnitY();
  double min_up_dot = 0.5;
  Rgb albedo = Rgb(0.9, 0.92, 0.95);
  double wrap = 0.5;
  Vec3 light_dir = Vec3(0.3, 1.0, 0.2).normalized();  // toward the light
};

inline std::string validate_snow(const SnowParams& s) {
  if (!(s.thickness >= 0.0)) return "snow.thickness must be >= 0";
  if (!(s.grid_spacing > 0.0)) return "snow.grid_spacing must be > 0";
  if (std::abs(s.up.norm() - 1.0) > 1e-6) return "snow.up must be unit length";
  if (!(s.min_up_dot >= 0.0 && s.min_up_dot <= 1.0)) return "snow.min_up_dot must be in [0,1]";
  if (!(s.wrap >= 0.0 && s.wrap <= 1.0)) return "snow.wrap must be in [0,1]";
  if (std::abs(s.light_dir.norm() - 1.0) > 1e-6) return "snow.light_dir must be unit length";
  return {};
}

/// Diffuse term with a softened terminator: max(0, (n.l + wrap) / (1 + wrap)).
inline double wrap_diffuse(const Vec3& n, const Vec3& l, double wrap) {
  return std::max(0.0, (n.dot(l) + wrap) / (1.0 + wrap));
}

/// World-space normal of a projected splat at pixel position `pixel`.
inline Vec3 sample_normal(const ProjectedSplat& splat, const Vec2& pixel, const Camera& cam) {
  const Vec3 nv = sample_normal_view(splat.view_center, splat.conic(), pixel - splat.mean2d, cam.focal);
  return cam.rotation.transpose() * nv;
}

struct SnowStats {
  std::size_t rays = 0;
  std::size_t placed = 0;
  std::size_t skipped_weight = 0;  // no dominant surface under the ray
  std::size_t skipped_steep = 0;
};

namespace detail {

// Basis (a, b) of the plane normal to up; up = +y gives a = +x, b = +z.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& up) {
  const Vec3 seed = std::abs(up.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
  const Vec3 a = (seed - seed.dot(up) * up).normalized();
  return {a, a.cross(up)};
}

struct RaySplat {
  Mat3 inv_cov;
  Vec3 shortest_axis;
  double opacity;
};

}  // namespace detail

/// Places snow Gaussians on the upward-facing surfaces of `scene`. Output order
/// is row-major over the ray lattice. Existing snow Gaussians are ignored.
inline std::vector<Gaussian> place_snow(const GaussianScene& scene, const SnowParams& s, SnowStats* stats = nullptr) {
  if (const auto why = validate_snow(s); !why.empty()) throw ParamError("snow", why);
  if (stats) *stats = {};
  std::vector<Gaussian> result;
  if (s.thickness == 0.0) return result;

  const auto basis = detail::plane_basis(s.up);
  const Vec3 a = basis.first, b = basis.second;
  const Vec3 dir = -s.up;
  std::vector<std::size_t> ids;
  double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY, hmax = -INFINITY, reach = 0.0;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Gaussian& g = scene[i];
    if (g.material != Material::Surface || g.opacity < kMinSplatAlpha) continue;
    ids.push_back(i);
    umin = std::min(umin, a.dot(g.center));
    umax = std::max(umax, a.dot(g.center));
    vmin = std::min(vmin, b.dot(g.center));
    vmax = std::max(vmax, b.dot(g.center));
    hmax = std::max(hmax, s.up.dot(g.center));
    reach = std::max(reach, 3.0 * g.scale.maxCoeff());
  }
  if (ids.empty()) return result;

  const double g = s.grid_spacing;
  const auto nu = std::size_t(std::floor((umax - umin) / g + 1e-9)) + 1;
  const auto nv = std::size_t(std::floor((vmax - vmin) / g + 1e-9)) + 1;
  const double top = hmax + reach + 1.0;

  std::vector<detail::RaySplat> rs(ids.size());
  std::vector<std::vector<std::uint32_t>> cells(nu * nv);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Gaussian& gs = scene[ids[k]];
    const Mat3 rot = gs.rotation.toRotationMatrix();
    const Vec3 inv_s2 = gs.scale.cwiseProduct(gs.scale).cwiseInverse();
    int axis;
    gs.scale.minCoeff(&axis);
    rs[k] = {rot * inv_s2.asDiagonal() * rot.transpose(), rot.col(axis), gs.opacity};
    const Mat3 cov = covariance(gs);
    const double su = 3.0 * std::sqrt(a.dot(cov * a)), sv = 3.0 * std::sqrt(b.dot(cov * b));
    const double cu = a.dot(gs.center) - umin, cv = b.dot(gs.center) - vmin;
    const auto i0 = std::size_t(std::max(0.0, std::ceil((cu - su) / g)));
    const auto j0 = std::size_t(std::max(0.0, std::ceil((cv - sv) / g)));
    const double i1 = std::min(double(nu - 1), std::floor((cu + su) / g));
    const double j1 = std::min(double(nv - 1), std::floor((cv + sv) / g));
    for (std::size_t j = j0; double(j) <= j1; ++j)
      for (std::size_t i = i0; double(i) <= i1; ++i) cells[j * nu + i].push_back(std::uint32_t(k));
  }

  Mat3 frame;
  frame.col(0) = a;
  frame.col(1) = s.up;
  frame.col(2) = b;
  const Quat snow_rot(frame);
  const Vec3 snow_scale(0.75 * g, 0.5 * s.thickness, 0.75 * g);
  const ShCoeffs snow_sh = [&] {
    ShCoeffs c;
    c.fill(Vec3::Zero());
    c[0] = dc_from_color(s.albedo);
    return c;
  }();

  std::vector<std::vector<Gaussian>> rows(nv);
  std::vector<SnowStats> row_stats(nv);
  parallel_for(nv, [&](std::size_t j) {
    struct Hit {
      double t;
      double alpha;
      std::uint32_t id;
    };
    std::vector<Hit> hits;
    std::vector<DepthSample> samples;
    for (std::size_t i = 0; i < nu; ++i) {
      ++row_stats[j].rays;
      const Vec3 origin = (umin + double(i) * g) * a + (vmin + double(j) * g) * b + top * s.up;
      hits.clear();
      for (const std::uint32_t k : cells[j * nu + i]) {
        const auto& r = rs[k];
        const Vec3 rel = scene[ids[k]].center - origin;
        const Vec3 sd = r.inv_cov * dir;
        const double den = dir.dot(sd);
        if (!(den > 0.0)) continue;
        const double t = sd.dot(rel) / den;
        if (t <= 0.0) continue;
        const Vec3 off = rel - t * dir;
        const double d2 = off.dot(r.inv_cov * off);
        if (d2 > 9.0) continue;
        const double alpha = std::min(kMaxSplatAlpha, r.opacity * std::exp(-0.5 * d2));
        if (alpha < kMinSplatAlpha) continue;
        hits.push_back({t, alpha, k});
      }
      std::stable_sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) { return x.t < y.t; });
      samples.clear();
      for (const auto& h : hits) samples.push_back({h.t, h.alpha});
      const GumbelDepth gd = gumbel_depth(samples);
      if (gd.weight < 0.5) {
        ++row_stats[j].skipped_weight;
        continue;
      }
      double tr = 1.0;
      Vec3 n = Vec3::Zero();
      for (std::size_t q = 0; q < hits.size() && q < gd.last; ++q) {
        if (q >= gd.first) {
          Vec3 ax = rs[hits[q].id].shortest_axis;
          if (ax.dot(s.up) < 0.0) ax = -ax;
          n += hits[q].alpha * tr * ax;
        }
        tr *= 1.0 - hits[q].alpha;
      }
      if (n.norm() < 1e-12 || n.normalized().dot(s.up) < s.min_up_dot) {
        ++row_stats[j].skipped_steep;
        continue;
      }
      Gaussian sg;
      sg.center = origin + gd.depth * dir + 0.5 * s.thickness * s.up;
      sg.rotation = snow_rot;
      sg.scale = snow_scale;
      sg.opacity = 0.95;
      sg.sh = snow_sh;
      sg.material = Material::Snow;
      rows[j].push_back(sg);
    }
  });
  for (std::size_t j = 0; j < nv; ++j) {
    result.insert(result.end(), rows[j].begin(), rows[j].end());
    if (stats) {
      stats->rays += row_stats[j].rays;
      stats->skipped_weight += row_stats[j].skipped_weight;
      stats->skipped_steep += row_stats[j].skipped_steep;
    }
  }
  if (stats) stats->placed = result.size();
  return result;
}

struct SnowedScene {
  GaussianScene scene;          // input plus snow Gaussians
  std::vector<Gaussian> snow;
};

/// Extends the scene with snow. Render with `defer_snow` and finish the frame with shade_snow.
inline SnowedScene apply_snow(const GaussianScene& scene, const SnowParams& s, SnowStats* stats = nullptr) {
  auto snow = place_snow(scene, s, stats);
  return {scene.with_appended(snow), std::move(snow)};
}

/// Per-pixel wrap-lighting factor of the blended snow normal; 0 where no snow was composited.
inline std::vector<double> snow_shade(const FrameBuffer& fb, const Camera& cam, const SnowParams& s) {
  std::vector<double> shade(fb.pixel_count(), 0.0);
  if (!fb.has_snow) return shade;
  const Vec3 l = cam.rotation * s.light_dir;
  for (std::size_t i = 0; i < fb.pixel_count(); ++i) {
    if (!(fb.snow_weight[i] > 0.0)) continue;
    const double len = fb.snow_normal[i].norm();
    if (len < 1e-12) continue;
    shade[i] = wrap_diffuse(fb.snow_normal[i] / len, l, s.wrap);
  }
  return shade;
}

/// Deferred snow lighting: adds albedo * wrap_diffuse(normal, light) where snow was composited.
inline FrameBuffer shade_snow(const FrameBuffer& fb, const Camera& cam, const SnowParams& s) {
  if (const auto why = validate_snow(s); !why.empty()) throw ParamError("snow", why);
  FrameBuffer out = fb;
  if (!fb.has_snow) return out;
  const Vec3 l = cam.rotation * s.light_dir;
  parallel_for(std::size_t(fb.height), [&](std::size_t y) {
    for (int x = 0; x < fb.width; ++x) {
      const std::size_t i = fb.index(x, int(y));
      if (!(fb.snow_weight[i] > 0.0)) continue;
      const double len = fb.snow_normal[i].norm();
      if (len < 1e-12) continue;
      out.color[i] += fb.snow_albedo[i] * wrap_diffuse(fb.snow_normal[i] / len, l, s.wrap);
    }
  });
  return out;
}

}  // namespace climategs
