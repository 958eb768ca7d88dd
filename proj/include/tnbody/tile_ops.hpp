#pragma once

#include <cmath>
#include <cstddef>

#include "tnbody/tile.hpp"

// Element-wise FP32 tile arithmetic. Each operation has an out-parameter
// form (used by the compute kernel to write into register slots) and a
// value-returning form. `out` may alias any input.

namespace tnbody::tile_ops {

inline void sub_tile(const Tile& a, const Tile& b, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = a[k] - b[k];
}

inline void add_tile(const Tile& a, const Tile& b, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = a[k] + b[k];
}

inline void mul_tile(const Tile& a, const Tile& b, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = a[k] * b[k];
}

inline void square_tile(const Tile& a, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = a[k] * a[k];
}

/// 1/sqrt(a) at full FP32 precision; a == 0 yields +inf.
inline void rsqrt_tile(const Tile& a, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = 1.0f / std::sqrt(a[k]);
}

/// acc + a*b, rounded after the multiply and again after the add.
inline void fma_tile(const Tile& a, const Tile& b, const Tile& acc, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = a[k] * b[k] + acc[k];
}

inline void mul_scalar_tile(const Tile& a, float s, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = a[k] * s;
}

inline void add_scalar_tile(const Tile& a, float s, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = a[k] + s;
}

/// s - a, with the scalar broadcast to every element.
inline void rsub_scalar_tile(const Tile& a, float s, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = s - a[k];
}

/// value where r2 > 0, exactly 0 where r2 == 0.
inline void mask_self_tile(const Tile& r2, const Tile& value, Tile& out) {
  for (std::size_t k = 0; k < kTileSize; ++k) out[k] = r2[k] > 0.0f ? value[k] : 0.0f;
}

inline void copy_tile(const Tile& a, Tile& out) { out = a; }

inline void zero_tile(Tile& out) { out.values.fill(0.0f); }

inline Tile sub_tile(const Tile& a, const Tile& b) { Tile o; sub_tile(a, b, o); return o; }
inline Tile add_tile(const Tile& a, const Tile& b) { Tile o; add_tile(a, b, o); return o; }
inline Tile mul_tile(const Tile& a, const Tile& b) { Tile o; mul_tile(a, b, o); return o; }
inline Tile square_tile(const Tile& a) { Tile o; square_tile(a, o); return o; }
inline Tile rsqrt_tile(const Tile& a) { Tile o; rsqrt_tile(a, o); return o; }
inline Tile fma_tile(const Tile& a, const Tile& b, const Tile& acc) { Tile o; fma_tile(a, b, acc, o); return o; }
inline Tile mul_scalar_tile(const Tile& a, float s) { Tile o; mul_scalar_tile(a, s, o); return o; }
inline Tile add_scalar_tile(const Tile& a, float s) { Tile o; add_scalar_tile(a, s, o); return o; }
inline Tile rsub_scalar_tile(const Tile& a, float s) { Tile o; rsub_scalar_tile(a, s, o); return o; }
inline Tile mask_self_tile(const Tile& r2, const Tile& value) { Tile o; mask_self_tile(r2, value, o); return o; }

}  // namespace tnbody::tile_ops
