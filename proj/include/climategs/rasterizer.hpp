#pragma once

// Tile-based forward splatting. Splats are projected with the local affine
// (EWA) approximation, depth sorted once, binned into 16x16 tiles and
// composited front to back per pixel.

#include "climategs/gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace climategs {

inline constexpr int kTileSize = 16;
inline constexpr double kCov2dFloor = 0.3;      // px^2 added to the 2D covariance diagonal
inline constexpr double kMinExtentPx = 0.3;     // 3-sigma radius below which a splat is culled
inline constexpr double kMaxSplatAlpha = 0.99;
inline constexpr double kMinSplatAlpha = 1.0 / 255.0;
inline constexpr double kSkyAlpha = 1e-3;       // accumulated opacity below which a pixel counts as sky

/// Pixel (x, y) samples the image plane at its center.
inline Vec2 pixel_center(int x, int y) { return {x + 0.5, y + 0.5}; }

struct ProjectedSplat {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();  // regularized (floor already added)
  double view_depth = 0.0;
  Vec3 view_center = Vec3::Zero();
  Rgb color = Rgb::Zero();
  double opacity = 0.0;
  std::size_t source_index = 0;
  Material material = Material::Surface;
  double radius_px = 0.0;  // 3-sigma radius of the regularized footprint

  /// Inverse of cov2d; zero matrix when degenerate.
  Mat2 conic() const {
    const double det = cov2d.determinant();
    if (!(det > 0.0)) return Mat2::Zero();
    Mat2 inv;
    inv << cov2d(1, 1), -cov2d(0, 1), -cov2d(1, 0), cov2d(0, 0);
    return inv / det;
  }
};

struct DepthSample {
  double depth;
  double alpha;  // evaluated splat alpha at the pixel, before transmittance weighting
};

struct RenderOptions {
  Rgb background = Rgb::Zero();
  double transmittance_cutoff = 1e-4;
  bool keep_samples = false;
  int sh_degree = -1;       // -1 uses the scene degree
  bool defer_snow = true;   // snow splats go to the snow G-buffer instead of the color buffer
};

/// Per-pixel render outputs. Color is linear and unclamped; clamping happens at image write.
struct FrameBuffer {
  int width = 0;
  int height = 0;
  Rgb background = Rgb::Zero();
  std::vector<Rgb> color;
  std::vector<double> depth;      // sum of T_i alpha_i d_i, no background term
  std::vector<double> alpha_acc;  // 1 - final transmittance
  // Snow G-buffer, filled for snow splats when deferring.
  std::vector<double> snow_weight;
  std::vector<Rgb> snow_albedo;   // sum of w_j * albedo_j
  std::vector<Vec3> snow_normal;  // sum of w_j * sampled normal_j, view space
  bool has_snow = false;
  std::optional<std::vector<std::vector<DepthSample>>> samples;

  FrameBuffer() = default;
  FrameBuffer(int w, int h, const Rgb& bg = Rgb::Zero())
      : width(w), height(h), background(bg), color(std::size_t(w) * h, bg), depth(std::size_t(w) * h, 0.0),
        alpha_acc(std::size_t(w) * h, 0.0), snow_weight(std::size_t(w) * h, 0.0),
        snow_albedo(std::size_t(w) * h, Rgb::Zero()), snow_normal(std::size_t(w) * h, Vec3::Zero()) {}

  std::size_t index(int x, int y) const { return std::size_t(y) * width + x; }
  std::size_t pixel_count() const { return std::size_t(width) * height; }
  bool is_sky(std::size_t i) const { return alpha_acc[i] < kSkyAlpha; }

  /// Depth normalized by accumulated opacity; +inf for sky pixels.
  double surface_depth(std::size_t i) const {
    return is_sky(i) ? std::numeric_limits<double>::infinity() : depth[i] / alpha_acc[i];
  }
  double surface_depth(int x, int y) const { return surface_depth(index(x, y)); }
};

// View-space normal sampled on the unit sphere fitted to a splat, for a pixel
// at offset `delta` from the projected center. Focal lengths convert the pixel
// offset into a view-space direction.
inline Vec3 sample_normal_view(const Vec3& view_center, const Mat2& conic, const Vec2& delta, const Vec2& focal) {
  const Vec3 n2 = -view_center.normalized();
  if (conic.isZero(0.0)) return n2;
  const double d2 = delta.dot(conic * delta);
  if (!(d2 > 0.0)) return n2;
  const double dist = std::min(1.0, std::sqrt(d2));
  const Vec3 d = Vec3(delta.x() / focal.x(), delta.y() / focal.y(), 0.0).normalized();
  const Vec3 n1(0.0, 0.0, -1.0);
  const double denom = n1.dot(n2);
  if (std::abs(denom) < 1e-12) return n2;
  Vec3 d_proj = d - (d.dot(n2) / denom) * n1;
  const double len = d_proj.norm();
  if (len < 1e-12) return n2;
  d_proj /= len;
  const double along = std::sqrt(std::max(0.0, 1.0 - dist * dist));
  return (dist * d_proj + along * n2).normalized();
}

/// Projects, culls and depth-sorts (stable, ascending) the scene's Gaussians.
inline std::vector<ProjectedSplat> project(const GaussianScene& scene, const Camera& cam, int sh_degree = -1) {
  const int degree = sh_degree < 0 ? scene.sh_degree() : std::min(sh_degree, kMaxShDegree);
  const Vec3 cam_pos = cam.position();
  const double lim_x = 1.3 * 0.5 * cam.width / cam.focal.x();
  const double lim_y = 1.3 * 0.5 * cam.height / cam.focal.y();
  const Mat3& w = cam.rotation;

  std::vector<ProjectedSplat> out;
  out.reserve(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Gaussian& g = scene[i];
    const Vec3 v = cam.to_view(g.center);
    if (!(v.z() > cam.near && v.z() < cam.far)) continue;

    const double tx = std::clamp(v.x() / v.z(), -lim_x, lim_x) * v.z();
    const double ty = std::clamp(v.y() / v.z(), -lim_y, lim_y) * v.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.focal.x() / v.z(), 0.0, -cam.focal.x() * tx / (v.z() * v.z()),
           0.0, cam.focal.y() / v.z(), -cam.focal.y() * ty / (v.z() * v.z());
    const Eigen::Matrix<double, 2, 3> t = jac * w;
    Mat2 cov = t * covariance(g) * t.transpose();
    cov = 0.5 * (cov + cov.transpose());

    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double raw_lmax = mid + std::sqrt(std::max(0.0, mid * mid - cov.determinant()));
    if (3.0 * std::sqrt(std::max(0.0, raw_lmax)) < kMinExtentPx) continue;

    cov(0, 0) += kCov2dFloor;
    cov(1, 1) += kCov2dFloor;
    const double lmax = raw_lmax + kCov2dFloor;
    const double radius = 3.0 * std::sqrt(lmax);
    const Vec2 mean = cam.project(v);
    if (mean.x() + radius < 0.0 || mean.x() - radius > cam.width || mean.y() + radius < 0.0 ||
        mean.y() - radius > cam.height)
      continue;

    ProjectedSplat s;
    s.mean2d = mean;
    s.cov2d = cov;
    s.view_depth = v.z();
    s.view_center = v;
    s.color = eval_sh(g.sh, (g.center - cam_pos).normalized(), degree);
    s.opacity = g.opacity;
    s.source_index = i;
    s.material = g.material;
    s.radius_px = radius;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ProjectedSplat& a, const ProjectedSplat& b) { return a.view_depth < b.view_depth; });
  return out;
}

namespace detail {

struct RasterSplat {
  double mx, my;
  double ca, cb, cc;  // conic
  double opacity;
  double r, g, b;
  double depth;
  bool snow;
  const ProjectedSplat* src;
  Mat2 conic;
};

}  // namespace detail

/// Composites already projected splats. Splats must be depth sorted.
inline FrameBuffer rasterize_splats(const std::vector<ProjectedSplat>& splats, const Camera& cam,
                                    const RenderOptions& opts = {}) {
  if (!(opts.transmittance_cutoff > 0.0 && opts.transmittance_cutoff < 1.0))
    throw Error("transmittance_cutoff must be in (0,1)");
  FrameBuffer fb(cam.width, cam.height, opts.background);
  if (opts.keep_samples) fb.samples.emplace(fb.pixel_count());

  const int tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  const int tiles_y = (cam.height + kTileSize - 1) / kTileSize;
  std::vector<detail::RasterSplat> rs;
  rs.reserve(splats.size());
  std::vector<std::vector<std::uint32_t>> bins(std::size_t(tiles_x) * tiles_y);
  for (const auto& s : splats) {
    const Mat2 con = s.conic();
    if (con.isZero(0.0)) continue;
    const int x0 = std::max(0, int(std::floor((s.mean2d.x() - s.radius_px) / kTileSize)));
    const int x1 = std::min(tiles_x - 1, int(std::floor((s.mean2d.x() + s.radius_px) / kTileSize)));
    const int y0 = std::max(0, int(std::floor((s.mean2d.y() - s.radius_px) / kTileSize)));
    const int y1 = std::min(tiles_y - 1, int(std::floor((s.mean2d.y() + s.radius_px) / kTileSize)));
    if (x0 > x1 || y0 > y1) continue;
    const bool snow = opts.defer_snow && s.material == Material::Snow;
    fb.has_snow = fb.has_snow || snow;
    const auto id = static_cast<std::uint32_t>(rs.size());
    rs.push_back({s.mean2d.x(), s.mean2d.y(), con(0, 0), con(0, 1), con(1, 1), s.opacity, s.color.x(), s.color.y(),
                  s.color.z(), s.view_depth, snow, &s, con});
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx) bins[std::size_t(ty) * tiles_x + tx].push_back(id);
  }

  const double cutoff = opts.transmittance_cutoff;
  parallel_for(bins.size(), [&](std::size_t tile) {
    const auto& list = bins[tile];
    const int tx = int(tile % tiles_x), ty = int(tile / tiles_x);
    const int xe = std::min(cam.width, (tx + 1) * kTileSize), ye = std::min(cam.height, (ty + 1) * kTileSize);
    for (int y = ty * kTileSize; y < ye; ++y) {
      for (int x = tx * kTileSize; x < xe; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        const std::size_t pi = fb.index(x, y);
        double t = 1.0, cr = 0.0, cg = 0.0, cb = 0.0, depth = 0.0;
        double snow_w = 0.0;
        Rgb snow_alb = Rgb::Zero();
        Vec3 snow_n = Vec3::Zero();
        std::vector<DepthSample>* samples = fb.samples ? &(*fb.samples)[pi] : nullptr;
        for (const std::uint32_t id : list) {
          const auto& s = rs[id];
          const double dx = px - s.mx, dy = py - s.my;
          const double power = -0.5 * (s.ca * dx * dx + 2.0 * s.cb * dx * dy + s.cc * dy * dy);
          if (power > 0.0) continue;
          const double alpha = std::min(kMaxSplatAlpha, s.opacity * std::exp(power));
          if (alpha < kMinSplatAlpha) continue;
          const double w = alpha * t;
          if (s.snow) {
            snow_w += w;
            snow_alb += w * Rgb(s.r, s.g, s.b);
            snow_n += w * sample_normal_view(s.src->view_center, s.conic, Vec2(dx, dy), cam.focal);
          } else {
            cr += w * s.r;
            cg += w * s.g;
            cb += w * s.b;
          }
          depth += w * s.depth;
          if (samples) samples->push_back({s.depth, alpha});
          t *= 1.0 - alpha;
          if (t < cutoff) break;
        }
        fb.color[pi] = Rgb(cr, cg, cb) + t * opts.background;
        fb.depth[pi] = depth;
        fb.alpha_acc[pi] = 1.0 - t;
        fb.snow_weight[pi] = snow_w;
        fb.snow_albedo[pi] = snow_alb;
        fb.snow_normal[pi] = snow_n;
      }
    }
  });
  return fb;
}

inline FrameBuffer rasterize(const GaussianScene& scene, const Camera& cam, const RenderOptions& opts = {}) {
  if (const auto why = cam.validate(); !why.empty()) throw Error("invalid camera: " + why);
  return rasterize_splats(project(scene, cam, opts.sh_degree), cam, opts);
}

/// Ordered (depth, alpha) samples composited at a pixel. Requires keep_samples.
inline const std::vector<DepthSample>& pixel_samples(const FrameBuffer& fb, int x, int y) {
  if (!fb.samples) throw Error("pixel_samples: frame was rendered without keep_samples");
  if (x < 0 || y < 0 || x >= fb.width || y >= fb.height) throw Error("pixel_samples: pixel out of range");
  return (*fb.samples)[fb.index(x, y)];
}

}  // namespace climategs
