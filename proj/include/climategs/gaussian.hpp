#pragma once

#include "climategs/core.hpp"
#include "climategs/sh.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace climategs {

/// How a splat is colored at render time. Snow splats are shaded by the
/// deferred snow pass instead of their SH coefficients.
enum class Material : unsigned char { Surface = 0, Snow = 1 };

/// One anisotropic 3D Gaussian. Opacity and scale are stored activated.
struct Gaussian {
  Vec3 center = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Vec3 scale = Vec3::Ones();
  double opacity = 1.0;
  ShCoeffs sh = [] {
    ShCoeffs c;
    c.fill(Vec3::Zero());
    return c;
  }();
  Material material = Material::Surface;

  /// Checks the invariants. Returns an empty string when valid, else the reason.
  std::string validate() const {
    if (std::abs(rotation.norm() - 1.0) > 1e-6) return "rotation is not a unit quaternion";
    if ((scale.array() <= 0.0).any()) return "scale must be strictly positive";
    if (!(opacity >= 0.0 && opacity <= 1.0)) return "opacity outside [0,1]";
    if (!center.allFinite()) return "center is not finite";
    return {};
  }
};

/// Sigma = R S S^T R^T.
inline Mat3 covariance(const Gaussian& g) {
  const Mat3 r = g.rotation.toRotationMatrix();
  const Mat3 s2 = g.scale.cwiseProduct(g.scale).asDiagonal();
  Mat3 sigma = r * s2 * r.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

struct Bounds {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (min.array() > max.array()).any(); }
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 center() const { return empty() ? Vec3::Zero() : Vec3(0.5 * (min + max)); }
  Vec3 extent() const { return empty() ? Vec3::Zero() : Vec3(max - min); }
};

/// Ordered set of Gaussians. Treated as an immutable value once built;
/// transforms produce new scenes.
class GaussianScene {
 public:
  GaussianScene() = default;
  explicit GaussianScene(std::vector<Gaussian> gaussians, int sh_degree = kMaxShDegree)
      : gaussians_(std::move(gaussians)), sh_degree_(sh_degree) {
    if (sh_degree_ < 0 || sh_degree_ > kMaxShDegree) throw Error("sh_degree must be in 0..3");
    for (const auto& g : gaussians_) bounds_.extend(g.center);
  }

  const std::vector<Gaussian>& gaussians() const { return gaussians_; }
  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  const Gaussian& operator[](std::size_t i) const { return gaussians_[i]; }
  int sh_degree() const { return sh_degree_; }
  const Bounds& bounds() const { return bounds_; }

  /// Returns a copy with `extra` appended.
  GaussianScene with_appended(const std::vector<Gaussian>& extra) const {
    std::vector<Gaussian> all = gaussians_;
    all.insert(all.end(), extra.begin(), extra.end());
    return GaussianScene(std::move(all), sh_degree_);
  }

 private:
  std::vector<Gaussian> gaussians_;
  int sh_degree_ = kMaxShDegree;
  Bounds bounds_;
};

/// Pinhole camera. View space follows the x-right, y-down, z-forward convention,
/// so view depth of a world point p is (R p + t).z.
struct Camera {
  Mat3 rotation = Mat3::Identity();  // world to view
  Vec3 translation = Vec3::Zero();
  Vec2 focal = Vec2(500.0, 500.0);
  Vec2 principal_point = Vec2(320.0, 180.0);
  int width = 640;
  int height = 360;
  double near = 0.01;
  double far = 1000.0;

  std::string validate() const {
    if (!(rotation * rotation.transpose() - Mat3::Identity()).isZero(1e-6) ||
        rotation.determinant() < 0.0)
      return "rotation is not orthonormal";
    if (!(near > 0.0 && near < far)) return "near/far invalid";
    if (width < 1 || height < 1) return "image size must be at least 1x1";
    if (!(focal.array() > 0.0).all()) return "focal length must be positive";
    return {};
  }

  Vec3 to_view(const Vec3& world) const { return rotation * world + translation; }
  Vec3 position() const { return -rotation.transpose() * translation; }
  Vec2 project(const Vec3& view) const {
    return {focal.x() * view.x() / view.z() + principal_point.x(),
            focal.y() * view.y() / view.z() + principal_point.y()};
  }
  /// View-space direction (not normalized, z = 1) through pixel position `px`.
  Vec3 pixel_ray(const Vec2& px) const {
    return {(px.x() - principal_point.x()) / focal.x(), (px.y() - principal_point.y()) / focal.y(), 1.0};
  }

  /// Camera at `eye` looking at `target`; `fov_y_deg` sets the vertical field of view.
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                        double fov_y_deg = 50.0, double near = 0.01, double far = 1000.0) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-9) right = forward.cross(std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ());
    right.normalize();
    const Vec3 down = forward.cross(right);
    Camera cam;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    const double f = 0.5 * height / std::tan(0.5 * fov_y_deg * M_PI / 180.0);
    cam.focal = Vec2(f, f);
    cam.principal_point = Vec2(0.5 * width, 0.5 * height);
    cam.width = width;
    cam.height = height;
    cam.near = near;
    cam.far = far;
    return cam;
  }

  /// Same pose and field of view at a different resolution.
  Camera resized(int w, int h) const {
    Camera c = *this;
    const double sx = double(w) / width, sy = double(h) / height;
    c.focal = Vec2(focal.x() * sx, focal.y() * sy);
    c.principal_point = Vec2(principal_point.x() * sx, principal_point.y() * sy);
    c.width = w;
    c.height = h;
    return c;
  }
};

/// Orbit pose around the scene bounds, used by the CLI and the service when no camera is given.
inline Camera orbit_camera(const Bounds& bounds, double azimuth_deg, double elevation_deg,
                           double radius_scale, int width, int height, const Vec3& up = Vec3::UnitY()) {
  const Vec3 c = bounds.center();
  const double radius = std::max(1.0, bounds.extent().norm()) * radius_scale;
  const double az = azimuth_deg * M_PI / 180.0, el = elevation_deg * M_PI / 180.0;
  Vec3 a = up.unitOrthogonal();
  Vec3 b = up.cross(a);
  const Vec3 eye = c + radius * (std::cos(el) * (std::cos(az) * a + std::sin(az) * b) + std::sin(el) * up);
  return Camera::look_at(eye, c, up, width, height, 50.0, 0.01, radius * 10.0 + 100.0);
}

}  // namespace climategs
