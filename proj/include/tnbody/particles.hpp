#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tnbody/error.hpp"

namespace tnbody {

/// Structure-of-arrays particle state in N-body units (G = 1).
///
/// Construction through `ParticleSystem::make` or `validate()` enforces:
/// n >= 2, strictly positive finite masses, finite phase-space coordinates,
/// and equal-length per-axis arrays.
struct ParticleSystem {
  std::vector<double> mass;
  std::vector<double> x, y, z;
  std::vector<double> vx, vy, vz;

  std::size_t size() const { return mass.size(); }

  static ParticleSystem with_size(std::size_t n) {
    ParticleSystem s;
    for (auto* v : s.arrays()) v->assign(n, 0.0);
    return s;
  }

  std::array<std::vector<double>*, 7> arrays() { return {&mass, &x, &y, &z, &vx, &vy, &vz}; }
  std::array<const std::vector<double>*, 7> arrays() const {
    return {&mass, &x, &y, &z, &vx, &vy, &vz};
  }

  /// Throws InputError describing the first violated invariant.
  void validate() const {
    const std::size_t n = size();
    if (n < 2) throw InputError("particle system needs at least 2 particles, got " + std::to_string(n));
    for (const auto* v : arrays())
      if (v->size() != n) throw InputError("particle system arrays have inconsistent lengths");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(std::isfinite(mass[i]) && mass[i] > 0.0))
        throw InputError("particle " + std::to_string(i) + " has non-positive or non-finite mass");
      for (std::size_t a = 1; a < 7; ++a)
        if (!std::isfinite((*arrays()[a])[i]))
          throw InputError("particle " + std::to_string(i) + " has a non-finite coordinate");
    }
  }

  bool operator==(const ParticleSystem&) const = default;
};

enum class Precision { fp32, fp64 };

inline const char* to_string(Precision p) { return p == Precision::fp32 ? "fp32" : "fp64"; }

/// Per-particle acceleration and jerk. FP32 results are stored widened to
/// double; every FP32 value is exactly representable.
struct AccelJerk {
  std::vector<double> ax, ay, az;
  std::vector<double> jx, jy, jz;
  Precision precision = Precision::fp64;

  static AccelJerk zeros(std::size_t n, Precision p) {
    AccelJerk r;
    for (auto* v : r.arrays()) v->assign(n, 0.0);
    r.precision = p;
    return r;
  }

  std::size_t size() const { return ax.size(); }

  std::array<std::vector<double>*, 6> arrays() { return {&ax, &ay, &az, &jx, &jy, &jz}; }
  std::array<const std::vector<double>*, 6> arrays() const { return {&ax, &ay, &az, &jx, &jy, &jz}; }

  bool operator==(const AccelJerk&) const = default;
};

inline double kinetic_energy(const ParticleSystem& s) {
  double k = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    k += 0.5 * s.mass[i] * (s.vx[i] * s.vx[i] + s.vy[i] * s.vy[i] + s.vz[i] * s.vz[i]);
  return k;
}

inline double potential_energy(const ParticleSystem& s, double softening = 0.0) {
  const std::size_t n = s.size();
  const double eps2 = softening * softening;
  double potential = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = s.x[j] - s.x[i];
      const double dy = s.y[j] - s.y[i];
      const double dz = s.z[j] - s.z[i];
      potential -= s.mass[i] * s.mass[j] / std::sqrt(dx * dx + dy * dy + dz * dz + eps2);
    }
  }
  return potential;
}

/// Total energy (kinetic + pairwise potential) in FP64, O(N^2).
inline double total_energy(const ParticleSystem& s, double softening = 0.0) {
  return kinetic_energy(s) + potential_energy(s, softening);
}

}  // namespace tnbody
