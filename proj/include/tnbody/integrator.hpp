#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "tnbody/engine.hpp"
#include "tnbody/error.hpp"
#include "tnbody/oracle.hpp"
#include "tnbody/particles.hpp"

namespace tnbody {

enum class Backend { engine, cpu_reference, oracle };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::engine: return "engine";
    case Backend::cpu_reference: return "cpu_reference";
    case Backend::oracle: return "oracle";
  }
  return "?";
}

inline Backend parse_backend(const std::string& s) {
  if (s == "engine") return Backend::engine;
  if (s == "cpu_reference" || s == "cpu") return Backend::cpu_reference;
  if (s == "oracle") return Backend::oracle;
  throw ConfigError("unknown backend '" + s + "'");
}

/// Default shared time step, 2^-6 N-body time units.
inline constexpr double kDefaultDt = 1.0 / 64.0;

struct SimulationConfig {
  double dt = kDefaultDt;
  std::size_t cycles = 10;
  Backend backend = Backend::engine;
  double softening = 0.0;
  EngineConfig engine;
  std::size_t cpu_threads = 1;
  /// Emit a snapshot every k cycles; 0 disables.
  std::size_t snapshot_every = 0;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be finite and > 0");
    if (cycles < 1) throw ConfigError("cycles must be >= 1");
    if (!(softening >= 0.0)) throw ConfigError("softening must be >= 0");
    if (cpu_threads < 1) throw ConfigError("cpu_threads must be >= 1");
    if (backend == Backend::engine) engine.validate();
  }
};

/// Evaluates acceleration and jerk for a particle state.
using ForceProvider = std::function<AccelJerk(const ParticleSystem&)>;

inline ForceProvider make_force_provider(const SimulationConfig& cfg) {
  switch (cfg.backend) {
    case Backend::engine: {
      EngineConfig e = cfg.engine;
      e.softening = cfg.softening;
      return [e](const ParticleSystem& s) { return engine_accel_jerk(s, e); };
    }
    case Backend::cpu_reference:
      return [t = cfg.cpu_threads, eps = cfg.softening](const ParticleSystem& s) { return optimized_cpu(s, t, eps); };
    case Backend::oracle:
      return [eps = cfg.softening](const ParticleSystem& s) { return brute_force_fp64(s, eps); };
  }
  throw ConfigError("unknown backend");
}

/// Particle state plus the force evaluated for it. Each Hermite step adds
/// one new evaluation.
struct HermiteState {
  ParticleSystem sys;
  AccelJerk force;
  double time = 0.0;
};

inline HermiteState start_hermite(ParticleSystem sys, const ForceProvider& provider) {
  HermiteState st;
  st.force = provider(sys);
  st.sys = std::move(sys);
  return st;
}

/// One fourth-order Hermite predictor-corrector step, all in FP64. The
/// force used for the correction, evaluated at the predicted state, is
/// carried forward as the force of the new state.
inline HermiteState hermite_step(const HermiteState& cur, const ForceProvider& provider, double dt) {
  const ParticleSystem& s = cur.sys;
  const AccelJerk& f0 = cur.force;
  const std::size_t n = s.size();
  const double dt2 = dt * dt / 2.0;
  const double dt3 = dt * dt * dt / 6.0;

  ParticleSystem pred = s;
  const std::vector<double>* r0[3] = {&s.x, &s.y, &s.z};
  const std::vector<double>* v0[3] = {&s.vx, &s.vy, &s.vz};
  const std::vector<double>* a0[3] = {&f0.ax, &f0.ay, &f0.az};
  const std::vector<double>* j0[3] = {&f0.jx, &f0.jy, &f0.jz};
  std::vector<double>* rp[3] = {&pred.x, &pred.y, &pred.z};
  std::vector<double>* vp[3] = {&pred.vx, &pred.vy, &pred.vz};
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (*r0[k])[i], v = (*v0[k])[i], a = (*a0[k])[i], j = (*j0[k])[i];
      (*rp[k])[i] = r + v * dt + a * dt2 + j * dt3;
      (*vp[k])[i] = v + a * dt + j * dt2;
    }
  }

  HermiteState next;
  next.force = provider(pred);
  next.time = cur.time + dt;
  const AccelJerk& f1 = next.force;
  const std::vector<double>* a1[3] = {&f1.ax, &f1.ay, &f1.az};
  const std::vector<double>* j1[3] = {&f1.jx, &f1.jy, &f1.jz};
  const double dt12 = dt * dt / 12.0;
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double aa = (*a0[k])[i], ab = (*a1[k])[i];
      const double v = (*v0[k])[i] + (aa + ab) * dt / 2.0 + ((*j0[k])[i] - (*j1[k])[i]) * dt12;
      (*rp[k])[i] = (*r0[k])[i] + ((*v0[k])[i] + v) * dt / 2.0 + (aa - ab) * dt12;
      (*vp[k])[i] = v;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k)
      if (!std::isfinite((*rp[k])[i]) || !std::isfinite((*vp[k])[i]))
        throw RuntimeFailure("hermite step produced a non-finite state for particle " + std::to_string(i));
  }
  next.sys = std::move(pred);
  return next;
}

/// Convenience form that evaluates the starting force itself.
inline ParticleSystem hermite_step(const ParticleSystem& sys, const ForceProvider& provider, double dt) {
  return hermite_step(start_hermite(sys, provider), provider, dt).sys;
}

struct TimingRecord {
  double start_s = 0.0;  // steady-clock seconds
  double end_s = 0.0;
  double time_to_solution_s = 0.0;
};

struct SimulationResult {
  ParticleSystem final_state;
  TimingRecord timing;
  std::size_t cycles = 0;
};

using SnapshotCallback = std::function<void(std::size_t cycle, const ParticleSystem&)>;

inline double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

/// Runs `cfg.cycles` Hermite steps. Time-to-solution brackets exactly the
/// force evaluations and integration, including the initial evaluation.
inline SimulationResult run_simulation(const SimulationConfig& cfg, const ParticleSystem& initial,
                                       const SnapshotCallback& on_snapshot = {}) {
  cfg.validate();
  initial.validate();
  const ForceProvider provider = make_force_provider(cfg);
  SimulationResult res;
  res.timing.start_s = steady_seconds();
  HermiteState st;
  try {
    st = start_hermite(initial, provider);
  } catch (const std::exception& e) {
    throw RuntimeFailure(std::string("initial force evaluation failed: ") + e.what());
  }
  for (std::size_t c = 1; c <= cfg.cycles; ++c) {
    try {
      st = hermite_step(st, provider, cfg.dt);
    } catch (const std::exception& e) {
      throw RuntimeFailure("cycle " + std::to_string(c) + ": " + e.what());
    }
    if (on_snapshot && cfg.snapshot_every > 0 && c % cfg.snapshot_every == 0) on_snapshot(c, st.sys);
  }
  res.timing.end_s = steady_seconds();
  res.timing.time_to_solution_s = res.timing.end_s - res.timing.start_s;
  res.final_state = std::move(st.sys);
  res.cycles = cfg.cycles;
  return res;
}

}  // namespace tnbody
