#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tnbody/error.hpp"

namespace tnbody {

inline constexpr std::size_t kTileRows = 32;
inline constexpr std::size_t kTileCols = 32;
inline constexpr std::size_t kTileSize = kTileRows * kTileCols;

/// A 32x32 row-major block of FP32 values; the unit of transfer and compute.
struct alignas(64) Tile {
  std::array<float, kTileSize> values{};

  static Tile filled(float v) {
    Tile t;
    t.values.fill(v);
    return t;
  }

  float& operator[](std::size_t k) { return values[k]; }
  float operator[](std::size_t k) const { return values[k]; }
  float& at(std::size_t row, std::size_t col) { return values[row * kTileCols + col]; }
  float at(std::size_t row, std::size_t col) const { return values[row * kTileCols + col]; }

  float* data() { return values.data(); }
  const float* data() const { return values.data(); }
  static constexpr std::size_t size() { return kTileSize; }

  bool operator==(const Tile&) const = default;
};

/// Flat data split into whole tiles; elements past `logical_len` are 0.0.
struct TiledArray {
  std::vector<Tile> tiles;
  std::size_t logical_len = 0;

  std::size_t tile_count() const { return tiles.size(); }
  float element(std::size_t k) const { return tiles[k / kTileSize][k % kTileSize]; }
};

inline std::size_t tiles_for(std::size_t logical_len) {
  return (logical_len + kTileSize - 1) / kTileSize;
}

/// Rounds each element to the nearest FP32 value and packs it into tiles.
inline TiledArray tilize(std::span<const double> data) {
  TiledArray out;
  out.logical_len = data.size();
  out.tiles.resize(tiles_for(data.size()));
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k]))
      throw InputError("tilize: non-finite element at index " + std::to_string(k));
    out.tiles[k / kTileSize][k % kTileSize] = static_cast<float>(data[k]);
  }
  return out;
}

inline TiledArray tilize(std::span<const double> data, std::size_t logical_len) {
  if (logical_len != data.size())
    throw InputError("tilize: logical length " + std::to_string(logical_len) +
                     " does not match data length " + std::to_string(data.size()));
  return tilize(data);
}

inline std::vector<float> untilize(const TiledArray& tiled) {
  std::vector<float> out(tiled.logical_len);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = tiled.element(k);
  return out;
}

/// Half-open range of tile indices.
struct TileRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool operator==(const TileRange&) const = default;
};

/// Contiguous outer-tile ownership for a core. Every core also reads the
/// full inner sequence [0, inner_count).
struct CoreTiles {
  std::size_t core = 0;
  TileRange outer;
  std::size_t inner_count = 0;
};

/// Splits `tile_count` outer tiles over `num_cores` as evenly as possible;
/// the first `tile_count % num_cores` cores take one extra tile. Cores past
/// the tile count get an empty range.
inline std::vector<CoreTiles> replicate_for_cores(std::size_t tile_count, std::size_t num_cores) {
  if (num_cores == 0) throw ConfigError("replicate_for_cores: num_cores must be >= 1");
  std::vector<CoreTiles> cores(num_cores);
  const std::size_t base = tile_count / num_cores;
  const std::size_t extra = tile_count % num_cores;
  std::size_t next = 0;
  for (std::size_t c = 0; c < num_cores; ++c) {
    const std::size_t count = base + (c < extra ? 1 : 0);
    cores[c] = CoreTiles{c, TileRange{next, next + count}, tile_count};
    next += count;
  }
  return cores;
}

inline std::vector<CoreTiles> replicate_for_cores(const TiledArray& tiled, std::size_t num_cores) {
  return replicate_for_cores(tiled.tile_count(), num_cores);
}

}  // namespace tnbody
