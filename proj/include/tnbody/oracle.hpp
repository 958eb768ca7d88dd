#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

#include "tnbody/error.hpp"
#include "tnbody/particles.hpp"

namespace tnbody {

/// Golden reference: FP64 double loop, j == i skipped, j ascending.
/// Coincident distinct particles are rejected unless softening > 0.
inline AccelJerk brute_force_fp64(const ParticleSystem& s, double softening = 0.0) {
  s.validate();
  const std::size_t n = s.size();
  const double eps2 = softening * softening;
  AccelJerk out = AccelJerk::zeros(n, Precision::fp64);
  for (std::size_t i = 0; i < n; ++i) {
    double ax = 0, ay = 0, az = 0, jx = 0, jy = 0, jz = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = s.x[j] - s.x[i];
      const double dy = s.y[j] - s.y[i];
      const double dz = s.z[j] - s.z[i];
      const double dvx = s.vx[j] - s.vx[i];
      const double dvy = s.vy[j] - s.vy[i];
      const double dvz = s.vz[j] - s.vz[i];
      const double r2 = dx * dx + dy * dy + dz * dz + eps2;
      if (r2 == 0.0)
        throw InputError("oracle: particles " + std::to_string(i) + " and " + std::to_string(j) +
                         " coincide (zero separation, no softening)");
      const double rinv2 = 1.0 / r2;
      const double mr3 = s.mass[j] * rinv2 * std::sqrt(rinv2);
      const double alpha = 3.0 * (dx * dvx + dy * dvy + dz * dvz) * rinv2;
      ax += mr3 * dx;
      ay += mr3 * dy;
      az += mr3 * dz;
      jx += mr3 * (dvx - alpha * dx);
      jy += mr3 * (dvy - alpha * dy);
      jz += mr3 * (dvz - alpha * dz);
    }
    out.ax[i] = ax;
    out.ay[i] = ay;
    out.az[i] = az;
    out.jx[i] = jx;
    out.jy[i] = jy;
    out.jz[i] = jz;
  }
  return out;
}

namespace detail {

struct Fp32Soa {
  std::vector<float> m, x, y, z, vx, vy, vz;
};

inline Fp32Soa to_fp32(const ParticleSystem& s) {
  auto cvt = [](const std::vector<double>& v) { return std::vector<float>(v.begin(), v.end()); };
  return {cvt(s.mass), cvt(s.x), cvt(s.y), cvt(s.z), cvt(s.vx), cvt(s.vy), cvt(s.vz)};
}

inline void fp32_rows(const Fp32Soa& p, std::size_t begin, std::size_t end, float eps2, AccelJerk& out) {
  const std::size_t n = p.m.size();
  for (std::size_t i = begin; i < end; ++i) {
    const float xi = p.x[i], yi = p.y[i], zi = p.z[i];
    const float vxi = p.vx[i], vyi = p.vy[i], vzi = p.vz[i];
    float ax = 0, ay = 0, az = 0, jx = 0, jy = 0, jz = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const float dx = p.x[j] - xi;
      const float dy = p.y[j] - yi;
      const float dz = p.z[j] - zi;
      const float dvx = p.vx[j] - vxi;
      const float dvy = p.vy[j] - vyi;
      const float dvz = p.vz[j] - vzi;
      const float r2 = dx * dx + dy * dy + dz * dz;
      const float rs = 1.0f / std::sqrt(eps2 > 0.0f ? r2 + eps2 : r2);
      const float rinv = r2 > 0.0f ? rs : 0.0f;
      const float rinv2 = rinv * rinv;
      const float mr3 = rinv * rinv2 * p.m[j];
      const float alpha = (dx * dvx + dy * dvy + dz * dvz) * rinv2 * 3.0f;
      ax = mr3 * dx + ax;
      ay = mr3 * dy + ay;
      az = mr3 * dz + az;
      jx = mr3 * (dvx - alpha * dx) + jx;
      jy = mr3 * (dvy - alpha * dy) + jy;
      jz = mr3 * (dvz - alpha * dz) + jz;
    }
    out.ax[i] = ax;
    out.ay[i] = ay;
    out.az[i] = az;
    out.jx[i] = jx;
    out.jy[i] = jy;
    out.jz[i] = jz;
  }
}

}  // namespace detail

/// Multi-threaded mixed-precision CPU baseline. Inputs are rounded to FP32
/// and every pair uses the same operation sequence as the tile compute
/// kernel; outputs match the engine bit-for-bit. Threads split the outer
/// loop only; values never depend on `num_threads`.
inline AccelJerk optimized_cpu(const ParticleSystem& s, std::size_t num_threads = 1, double softening = 0.0) {
  s.validate();
  if (num_threads < 1) throw ConfigError("optimized_cpu: num_threads must be >= 1");
  const std::size_t n = s.size();
  const auto p = detail::to_fp32(s);
  const float eps2 = static_cast<float>(softening * softening);
  AccelJerk out = AccelJerk::zeros(n, Precision::fp32);
  num_threads = std::min(num_threads, n);
  if (num_threads == 1) {
    detail::fp32_rows(p, 0, n, eps2, out);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + num_threads - 1) / num_threads;
  for (std::size_t t = 0; t < num_threads; ++t) {
    const std::size_t b = std::min(n, t * chunk);
    const std::size_t e = std::min(n, b + chunk);
    pool.emplace_back([&, b, e] { detail::fp32_rows(p, b, e, eps2, out); });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace tnbody
