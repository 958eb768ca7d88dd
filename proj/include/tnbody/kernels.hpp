#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "tnbody/circular_buffer.hpp"
#include "tnbody/dst_register.hpp"
#include "tnbody/error.hpp"
#include "tnbody/particles.hpp"
#include "tnbody/pipeline.hpp"
#include "tnbody/tile.hpp"
#include "tnbody/tile_ops.hpp"

namespace tnbody {

/// Device-side FP32 copy of a particle system, one TiledArray per quantity.
/// Padding lanes carry zero mass and sit at the origin with zero velocity.
struct ParticleTiles {
  TiledArray x, y, z, vx, vy, vz, mass;
  std::size_t n = 0;

  std::size_t tile_count() const { return mass.tile_count(); }

  /// Order matches the read kernel's push order: x y z vx vy vz [mass].
  std::array<const TiledArray*, 7> quantities() const { return {&x, &y, &z, &vx, &vy, &vz, &mass}; }
};

inline ParticleTiles tilize_particles(const ParticleSystem& s) {
  ParticleTiles t;
  t.n = s.size();
  t.x = tilize(s.x);
  t.y = tilize(s.y);
  t.z = tilize(s.z);
  t.vx = tilize(s.vx);
  t.vy = tilize(s.vy);
  t.vz = tilize(s.vz);
  t.mass = tilize(s.mass);
  return t;
}

inline constexpr std::size_t kOuterQuantities = 6;  // x y z vx vy vz
inline constexpr std::size_t kInnerQuantities = 7;  // x y z vx vy vz m
inline constexpr std::size_t kOutputQuantities = 6; // ax ay az jx jy jz

/// Circular buffers wired to one core.
///
/// outer/inner: read -> compute. staged: compute -> compute, the on-chip
/// scratch for intermediates that do not fit in the dst register.
/// out: compute -> write.
struct CoreBuffers {
  std::array<CircularBuffer*, kOuterQuantities> outer{};
  std::array<CircularBuffer*, kInnerQuantities> inner{};
  std::array<CircularBuffer*, 6> delta{};  // dx dy dz dvx dvy dvz
  CircularBuffer* rinv = nullptr;
  CircularBuffer* rinv2 = nullptr;
  CircularBuffer* mass_rinv3 = nullptr;
  CircularBuffer* alpha = nullptr;
  std::array<CircularBuffer*, kOutputQuantities> out{};

  static CoreBuffers make(BufferSet& set, std::size_t core, std::size_t capacity) {
    static constexpr const char* qn[] = {"x", "y", "z", "vx", "vy", "vz", "m"};
    static constexpr const char* dn[] = {"dx", "dy", "dz", "dvx", "dvy", "dvz"};
    static constexpr const char* on[] = {"ax", "ay", "az", "jx", "jy", "jz"};
    const std::string p = "core" + std::to_string(core) + ".";
    CoreBuffers b;
    for (std::size_t q = 0; q < kOuterQuantities; ++q) b.outer[q] = &set.make(capacity, p + "outer_" + qn[q]);
    for (std::size_t q = 0; q < kInnerQuantities; ++q) b.inner[q] = &set.make(capacity, p + "inner_" + qn[q]);
    for (std::size_t q = 0; q < 6; ++q) b.delta[q] = &set.make(capacity, p + dn[q]);
    b.rinv = &set.make(capacity, p + "rinv");
    b.rinv2 = &set.make(capacity, p + "rinv2");
    b.mass_rinv3 = &set.make(capacity, p + "m_rinv3");
    b.alpha = &set.make(capacity, p + "alpha");
    for (std::size_t q = 0; q < kOutputQuantities; ++q) b.out[q] = &set.make(capacity, p + on[q]);
    return b;
  }
};

/// What a kernel instance iterates over: the owned outer tiles and the full
/// inner tile sequence. Read and compute walk the same (outer x inner) loop.
struct KernelSpec {
  KernelStage kind = KernelStage::read;
  std::size_t core = 0;
  TileRange outer;
  std::size_t inner_count = 0;
};

/// Reader: for each owned outer tile, push its six phase-space tiles once,
/// then stream every inner tile (all seven quantities) in ascending order.
inline void read_kernel(const KernelSpec& spec, const ParticleTiles& src, const CoreBuffers& cbs) {
  if (src.tile_count() != spec.inner_count)
    throw ContractViolation("read kernel: source has " + std::to_string(src.tile_count()) +
                            " tiles, spec expects " + std::to_string(spec.inner_count));
  const auto q = src.quantities();
  for (std::size_t o = spec.outer.begin; o < spec.outer.end; ++o) {
    for (std::size_t k = 0; k < kOuterQuantities; ++k) cbs.outer[k]->push(q[k]->tiles[o]);
    for (std::size_t i = 0; i < spec.inner_count; ++i)
      for (std::size_t k = 0; k < kInnerQuantities; ++k) cbs.inner[k]->push(q[k]->tiles[i]);
  }
}

namespace detail {

// Copies a dst tile into a staging buffer and makes the copy visible.
inline void pack(const Tile& t, CircularBuffer& cb) {
  cb.reserve_back(1);
  cb.reserved(0) = t;
  cb.push_back(1);
}

inline const Tile& stage_front(CircularBuffer& cb) {
  cb.wait_front(1);
  return cb.front(0);
}

}  // namespace detail

/// Compute: tiled force-and-jerk accumulation for the owned outer tiles.
///
/// Per outer tile, six accumulators (ax..jz) live in dst for the whole inner
/// loop; two more dst slots are scratch. Each inner particle is broadcast
/// against the 1024 outer lanes, and every intermediate that is reused
/// (dx..dvz, 1/r, 1/r^2, m/r^3, 3(r.v)/r^2) goes through a staging buffer.
///
///   a_i += m_j r_ij / r^3
///   j_i += m_j (v_ij - 3 (r_ij . v_ij) r_ij / r^2) / r^3
///
/// with r_ij = r_j - r_i, v_ij = v_j - v_i. Lanes with r^2 == 0 (the particle
/// itself, coincident particles, zero-mass padding at the origin) are masked
/// to contribute exactly zero.
inline void compute_force_jerk(const KernelSpec& spec, const CoreBuffers& cbs, DstRegister& dst,
                               float softening2 = 0.0f) {
  using namespace tile_ops;
  for (std::size_t o = spec.outer.begin; o < spec.outer.end; ++o) {
    std::array<const Tile*, kOuterQuantities> outer{};
    for (std::size_t k = 0; k < kOuterQuantities; ++k) outer[k] = &detail::stage_front(*cbs.outer[k]);

    std::array<DstRegister::Slot, kOutputQuantities> acc;
    for (auto& a : acc) {
      a = dst.acquire();
      zero_tile(*a);
    }
    DstRegister::Slot s0 = dst.acquire();
    DstRegister::Slot s1 = dst.acquire();

    for (std::size_t i = 0; i < spec.inner_count; ++i) {
      std::array<const Tile*, kInnerQuantities> in{};
      for (std::size_t k = 0; k < kInnerQuantities; ++k) in[k] = &detail::stage_front(*cbs.inner[k]);

      for (std::size_t lane = 0; lane < kTileSize; ++lane) {
        // Displacements and relative velocities.
        for (std::size_t k = 0; k < 6; ++k) {
          rsub_scalar_tile(*outer[k], (*in[k])[lane], *s0);
          detail::pack(*s0, *cbs.delta[k]);
        }
        std::array<const Tile*, 6> d{};
        for (std::size_t k = 0; k < 6; ++k) d[k] = &detail::stage_front(*cbs.delta[k]);

        // r^2 and masked 1/r.
        square_tile(*d[0], *s0);
        square_tile(*d[1], *s1);
        add_tile(*s0, *s1, *s0);
        square_tile(*d[2], *s1);
        add_tile(*s0, *s1, *s0);
        if (softening2 > 0.0f) {
          add_scalar_tile(*s0, softening2, *s1);
          rsqrt_tile(*s1, *s1);
        } else {
          rsqrt_tile(*s0, *s1);
        }
        mask_self_tile(*s0, *s1, *s1);
        detail::pack(*s1, *cbs.rinv);
        const Tile& rinv = detail::stage_front(*cbs.rinv);

        // 1/r^2 and m/r^3.
        square_tile(rinv, *s0);
        detail::pack(*s0, *cbs.rinv2);
        mul_tile(rinv, *s0, *s1);
        mul_scalar_tile(*s1, (*in[6])[lane], *s1);
        detail::pack(*s1, *cbs.mass_rinv3);
        const Tile& rinv2 = detail::stage_front(*cbs.rinv2);
        const Tile& mr3 = detail::stage_front(*cbs.mass_rinv3);

        // alpha = 3 (r . v) / r^2.
        mul_tile(*d[0], *d[3], *s0);
        mul_tile(*d[1], *d[4], *s1);
        add_tile(*s0, *s1, *s0);
        mul_tile(*d[2], *d[5], *s1);
        add_tile(*s0, *s1, *s0);
        mul_tile(*s0, rinv2, *s1);
        mul_scalar_tile(*s1, 3.0f, *s1);
        detail::pack(*s1, *cbs.alpha);
        const Tile& alpha = detail::stage_front(*cbs.alpha);

        for (std::size_t c = 0; c < 3; ++c) fma_tile(mr3, *d[c], *acc[c], *acc[c]);
        for (std::size_t c = 0; c < 3; ++c) {
          mul_tile(alpha, *d[c], *s0);
          sub_tile(*d[c + 3], *s0, *s0);
          fma_tile(mr3, *s0, *acc[c + 3], *acc[c + 3]);
        }

        for (auto* cb : cbs.delta) cb->pop_front(1);
        cbs.rinv->pop_front(1);
        cbs.rinv2->pop_front(1);
        cbs.mass_rinv3->pop_front(1);
        cbs.alpha->pop_front(1);
      }

      for (std::size_t c = 0; c < kOutputQuantities; ++c)
        for (std::size_t k = 0; k < kTileSize; ++k)
          if (!std::isfinite((*acc[c])[k]))
            throw RuntimeFailure("compute kernel: non-finite accumulator for outer tile " + std::to_string(o) +
                                 ", inner tile " + std::to_string(i));
      for (auto* cb : cbs.inner) cb->pop_front(1);
    }

    for (std::size_t c = 0; c < kOutputQuantities; ++c) detail::pack(*acc[c], *cbs.out[c]);
    for (auto* cb : cbs.outer) cb->pop_front(1);
  }
}

/// Destination for result tiles; rejects out-of-range and duplicate writes.
class ResultSink {
 public:
  ResultSink(std::size_t n, std::size_t tile_count)
      : result_(AccelJerk::zeros(n, Precision::fp32)),
        tile_count_(tile_count),
        written_(std::make_unique<std::atomic<bool>[]>(tile_count * kOutputQuantities)) {}

  void write(std::size_t quantity, std::size_t tile, const Tile& t) {
    if (quantity >= kOutputQuantities || tile >= tile_count_)
      throw RuntimeFailure("write kernel: tile index " + std::to_string(tile) + " out of range");
    if (written_[tile * kOutputQuantities + quantity].exchange(true))
      throw RuntimeFailure("write kernel: tile " + std::to_string(tile) + " written twice");
    auto& dst = *result_.arrays()[quantity];
    const std::size_t begin = tile * kTileSize;
    const std::size_t end = std::min(dst.size(), begin + kTileSize);
    for (std::size_t k = begin; k < end; ++k) dst[k] = t[k - begin];
  }

  bool tile_written(std::size_t quantity, std::size_t tile) const {
    return written_[tile * kOutputQuantities + quantity].load();
  }

  bool complete() const {
    for (std::size_t k = 0; k < tile_count_ * kOutputQuantities; ++k)
      if (!written_[k].load()) return false;
    return true;
  }

  std::size_t tile_count() const { return tile_count_; }
  const AccelJerk& result() const { return result_; }
  AccelJerk take() { return std::move(result_); }

 private:
  AccelJerk result_;
  std::size_t tile_count_;
  std::unique_ptr<std::atomic<bool>[]> written_;
};

/// Writer: drains six result tiles per owned outer tile into the sink.
inline void write_kernel(const KernelSpec& spec, const CoreBuffers& cbs, ResultSink& sink) {
  for (std::size_t o = spec.outer.begin; o < spec.outer.end; ++o) {
    for (std::size_t c = 0; c < kOutputQuantities; ++c) {
      cbs.out[c]->wait_front(1);
      sink.write(c, o, cbs.out[c]->front(0));
      cbs.out[c]->pop_front(1);
    }
  }
}

}  // namespace tnbody
