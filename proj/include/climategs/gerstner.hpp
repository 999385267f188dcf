#pragma once

// Sum-of-Gerstner-waves water surface in a plane-local frame where y is the
// plane normal and (x, z) span the plane.

#include "climategs/core.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace climategs {

inline constexpr double kGravity = 9.81;

struct GerstnerWave {
  Vec2 direction = Vec2(1.0, 0.0);  // unit, on the plane
  double wavelength = 4.0;
  double steepness = 0.0;           // Q in [0,1]
  std::optional<double> phase_speed;  // world units / s; deep-water dispersion when unset
  double phase0 = 0.0;

  double wavenumber() const { return 2.0 * M_PI / wavelength; }
  double angular_frequency() const {
    const double k = wavenumber();
    return phase_speed ? *phase_speed * k : std::sqrt(kGravity * k);
  }
};

/// Empty string when the wave set is valid, else the reason.
inline std::string validate_waves(const std::vector<GerstnerWave>& waves) {
  double q_sum = 0.0;
  for (const auto& w : waves) {
    if (std::abs(w.direction.norm() - 1.0) > 1e-6) return "wave direction must be unit length";
    if (!(w.wavelength > 0.0)) return "wavelength must be > 0";
    if (!(w.steepness >= 0.0 && w.steepness <= 1.0)) return "steepness must be in [0,1]";
    q_sum += w.steepness;
  }
  if (q_sum > 1.0 + 1e-12) return "sum of steepness must be <= 1";
  return {};
}

/// Displacement of the rest point `xz` at time t: horizontal
/// sum Q/k D cos(theta), vertical sum Q/k sin(theta), theta = k D.xz - w t + phi.
inline Vec3 gerstner_displace(const Vec2& xz, double t, const std::vector<GerstnerWave>& waves) {
  Vec3 off = Vec3::Zero();
  for (const auto& w : waves) {
    const double k = w.wavenumber();
    const double theta = k * w.direction.dot(xz) - w.angular_frequency() * t + w.phase0;
    const double amp = w.steepness / k;
    off.x() += amp * w.direction.x() * std::cos(theta);
    off.z() += amp * w.direction.y() * std::cos(theta);
    off.y() += amp * std::sin(theta);
  }
  return off;
}

/// Analytic unit normal of the displaced surface at rest point `xz`.
inline Vec3 gerstner_normal(const Vec2& xz, double t, const std::vector<GerstnerWave>& waves) {
  // Tangents dP/dx and dP/dz of P = (x, 0, z) + displacement.
  Vec3 tx(1.0, 0.0, 0.0), tz(0.0, 0.0, 1.0);
  for (const auto& w : waves) {
    const double k = w.wavenumber();
    const double theta = k * w.direction.dot(xz) - w.angular_frequency() * t + w.phase0;
    const double s = std::sin(theta), c = std::cos(theta);
    const double dx = w.direction.x(), dz = w.direction.y(), q = w.steepness;
    tx += Vec3(-q * dx * dx * s, q * dx * c, -q * dx * dz * s);
    tz += Vec3(-q * dx * dz * s, q * dz * c, -q * dz * dz * s);
  }
  return tz.cross(tx).normalized();
}

/// The wave set frozen at one time, with per-wave constants folded; evaluates
/// the same surface as gerstner_displace and gerstner_normal.
class WaveField {
 public:
  WaveField(const std::vector<GerstnerWave>& waves, double t) {
    terms_.reserve(waves.size());
    for (const auto& w : waves) {
      const double k = w.wavenumber();
      terms_.push_back({k * w.direction.x(), k * w.direction.y(), -w.angular_frequency() * t + w.phase0,
                        w.steepness / k, w.steepness, w.direction.x(), w.direction.y()});
    }
  }

  bool empty() const { return terms_.empty(); }

  double height(const Vec2& xz) const {
    double h = 0.0;
    for (const auto& w : terms_) h += w.amp * std::sin(w.kx * xz.x() + w.kz * xz.y() + w.phase);
    return h;
  }

  Vec3 normal(const Vec2& xz) const {
    double txx = 1.0, txy = 0.0, txz = 0.0, tzx = 0.0, tzy = 0.0, tzz = 1.0;
    for (const auto& w : terms_) {
      const double theta = w.kx * xz.x() + w.kz * xz.y() + w.phase;
      const double qs = w.q * std::sin(theta), qc = w.q * std::cos(theta);
      txx -= w.dx * w.dx * qs;
      txy += w.dx * qc;
      txz -= w.dx * w.dz * qs;
      tzx -= w.dx * w.dz * qs;
      tzy += w.dz * qc;
      tzz -= w.dz * w.dz * qs;
    }
    return Vec3(tzx, tzy, tzz).cross(Vec3(txx, txy, txz)).normalized();
  }

 private:
  struct Term {
    double kx, kz, phase, amp, q, dx, dz;
  };
  std::vector<Term> terms_;
};

}  // namespace climategs
