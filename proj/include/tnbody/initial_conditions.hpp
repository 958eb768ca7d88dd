#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "tnbody/error.hpp"
#include "tnbody/particles.hpp"
#include "tnbody/rng.hpp"
#include "tnbody/snapshot.hpp"

namespace tnbody {

enum class ICModel { plummer, uniform_sphere, two_body_circular, file };

inline const char* to_string(ICModel m) {
  switch (m) {
    case ICModel::plummer: return "plummer";
    case ICModel::uniform_sphere: return "uniform_sphere";
    case ICModel::two_body_circular: return "two_body_circular";
    case ICModel::file: return "file";
  }
  return "?";
}

inline ICModel parse_ic_model(const std::string& s) {
  if (s == "plummer") return ICModel::plummer;
  if (s == "uniform_sphere") return ICModel::uniform_sphere;
  if (s == "two_body_circular") return ICModel::two_body_circular;
  if (s == "file") return ICModel::file;
  throw ConfigError("unknown initial-condition model '" + s + "'");
}

/// Plummer scale length that puts the model in standard N-body units
/// (G = M = 1, E = -1/4, virial radius 1).
inline constexpr double kPlummerStandardScale = 3.0 * std::numbers::pi / 16.0;

struct ICSpec {
  ICModel model = ICModel::plummer;
  std::size_t n = 1024;
  std::uint64_t seed = 42;
  /// plummer: scale length a (default standard units). uniform_sphere: ball
  /// radius (default 1). two_body_circular: separation (default 1).
  std::optional<double> scale_radius;
  std::string path;  // file model only

  double scale() const {
    if (scale_radius) return *scale_radius;
    return model == ICModel::plummer ? kPlummerStandardScale : 1.0;
  }
};

/// Subtracts the mass-weighted mean position and velocity.
inline void recenter(ParticleSystem& s) {
  double m = 0.0;
  double c[6] = {0, 0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    m += s.mass[i];
    c[0] += s.mass[i] * s.x[i];
    c[1] += s.mass[i] * s.y[i];
    c[2] += s.mass[i] * s.z[i];
    c[3] += s.mass[i] * s.vx[i];
    c[4] += s.mass[i] * s.vy[i];
    c[5] += s.mass[i] * s.vz[i];
  }
  std::vector<double>* axes[6] = {&s.x, &s.y, &s.z, &s.vx, &s.vy, &s.vz};
  for (int k = 0; k < 6; ++k) {
    const double mean = c[k] / m;
    for (auto& v : *axes[k]) v -= mean;
  }
}

namespace detail {

inline void random_direction(Xoshiro256& rng, double radius, double& x, double& y, double& z) {
  z = (1.0 - 2.0 * rng.uniform()) * radius;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double rho = std::sqrt(std::max(0.0, radius * radius - z * z));
  x = rho * std::cos(phi);
  y = rho * std::sin(phi);
}

// Inverse-transform radius and rejection-sampled speed from the isotropic
// distribution function, in units with G = M = a = 1.
inline ParticleSystem plummer(std::size_t n, std::uint64_t seed, double a) {
  constexpr double kMaxRadius = 10.0;
  Xoshiro256 rng(seed);
  ParticleSystem s = ParticleSystem::with_size(n);
  const double vscale = 1.0 / std::sqrt(a);
  for (std::size_t i = 0; i < n; ++i) {
    double r;
    do {
      r = 1.0 / std::sqrt(std::pow(rng.uniform_open0(), -2.0 / 3.0) - 1.0);
    } while (!(r <= kMaxRadius));
    detail::random_direction(rng, r * a, s.x[i], s.y[i], s.z[i]);

    double q, g;
    do {
      q = rng.uniform();
      g = 0.1 * rng.uniform();
    } while (g > q * q * std::pow(1.0 - q * q, 3.5));
    const double v = q * std::sqrt(2.0) * std::pow(1.0 + r * r, -0.25);
    detail::random_direction(rng, v * vscale, s.vx[i], s.vy[i], s.vz[i]);
    s.mass[i] = 1.0 / static_cast<double>(n);
  }
  return s;
}

inline ParticleSystem uniform_sphere(std::size_t n, std::uint64_t seed, double radius) {
  Xoshiro256 rng(seed);
  ParticleSystem s = ParticleSystem::with_size(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x, y, z;
    do {
      x = rng.uniform(-1.0, 1.0);
      y = rng.uniform(-1.0, 1.0);
      z = rng.uniform(-1.0, 1.0);
    } while (x * x + y * y + z * z > 1.0);
    s.x[i] = x * radius;
    s.y[i] = y * radius;
    s.z[i] = z * radius;
    s.mass[i] = 1.0 / static_cast<double>(n);
  }
  return s;
}

// Unit masses on the x axis, counter-moving along y at half the relative
// circular speed sqrt(M_total / separation).
inline ParticleSystem two_body_circular(double separation) {
  ParticleSystem s = ParticleSystem::with_size(2);
  s.mass = {1.0, 1.0};
  const double v = std::sqrt(2.0 / separation);
  s.x = {-0.5 * separation, 0.5 * separation};
  s.vy = {-0.5 * v, 0.5 * v};
  return s;
}

}  // namespace detail

/// Builds the particle system for `spec`. Seeded models are deterministic
/// in the seed. Every generated model is recentred: centre of mass at rest
/// at the origin.
inline ParticleSystem generate(const ICSpec& spec) {
  if (spec.model == ICModel::file) return load_snapshot(spec.path);
  if (spec.n < 2) throw ConfigError("initial conditions need n >= 2");
  if (!(spec.scale() > 0.0) || !std::isfinite(spec.scale())) throw ConfigError("scale radius must be positive");
  ParticleSystem s;
  switch (spec.model) {
    case ICModel::plummer: s = detail::plummer(spec.n, spec.seed, spec.scale()); break;
    case ICModel::uniform_sphere: s = detail::uniform_sphere(spec.n, spec.seed, spec.scale()); break;
    case ICModel::two_body_circular:
      if (spec.n != 2) throw ConfigError("two_body_circular requires n = 2");
      s = detail::two_body_circular(spec.scale());
      break;
    case ICModel::file: break;
  }
  recenter(s);
  s.validate();
  return s;
}

}  // namespace tnbody
