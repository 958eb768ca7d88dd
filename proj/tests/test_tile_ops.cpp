#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>

#include "tnbody/rng.hpp"
#include "tnbody/tile_ops.hpp"

using namespace tnbody;
using namespace tnbody::tile_ops;

namespace {

Tile random_tile(std::uint64_t seed, double lo = -4.0, double hi = 4.0) {
  Xoshiro256 rng(seed);
  Tile t;
  for (auto& v : t.values) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

template <class F>
bool lanes_match(const Tile& got, F scalar) {
  for (std::size_t k = 0; k < kTileSize; ++k) {
    const float want = scalar(k);
    const float have = got[k];
    if (std::memcmp(&have, &want, sizeof want) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("elementwise binary ops equal scalar FP32 loops bit for bit", "[tile_ops]") {
  const Tile a = random_tile(1), b = random_tile(2), c = random_tile(3);
  CHECK(lanes_match(sub_tile(a, b), [&](std::size_t k) { return a[k] - b[k]; }));
  CHECK(lanes_match(add_tile(a, b), [&](std::size_t k) { return a[k] + b[k]; }));
  CHECK(lanes_match(mul_tile(a, b), [&](std::size_t k) { return a[k] * b[k]; }));
  CHECK(lanes_match(square_tile(a), [&](std::size_t k) { return a[k] * a[k]; }));
  CHECK(lanes_match(fma_tile(a, b, c), [&](std::size_t k) {
    const float p = a[k] * b[k];
    return p + c[k];
  }));
}

TEST_CASE("scalar-broadcast ops", "[tile_ops]") {
  const Tile a = random_tile(4);
  CHECK(lanes_match(mul_scalar_tile(a, 3.0f), [&](std::size_t k) { return a[k] * 3.0f; }));
  CHECK(lanes_match(add_scalar_tile(a, 0.5f), [&](std::size_t k) { return a[k] + 0.5f; }));
  CHECK(lanes_match(rsub_scalar_tile(a, 1.25f), [&](std::size_t k) { return 1.25f - a[k]; }));
}

TEST_CASE("rsqrt of positive lanes and of zero", "[tile_ops]") {
  const Tile a = random_tile(5, 1e-3, 100.0);
  CHECK(lanes_match(rsqrt_tile(a), [&](std::size_t k) { return 1.0f / std::sqrt(a[k]); }));
  const Tile z = rsqrt_tile(Tile::filled(0.0f));
  CHECK(std::isinf(z[0]));
  CHECK(z[0] > 0);
  CHECK(rsqrt_tile(Tile::filled(4.0f))[17] == 0.5f);
}

TEST_CASE("mask_self zeroes lanes where r^2 is zero", "[tile_ops]") {
  Tile r2 = Tile::filled(1.0f);
  r2[3] = 0.0f;
  r2[900] = 0.0f;
  const Tile v = Tile::filled(std::numeric_limits<float>::infinity());
  const Tile m = mask_self_tile(r2, v);
  CHECK(m[3] == 0.0f);
  CHECK(m[900] == 0.0f);
  CHECK(std::isinf(m[0]));
}

TEST_CASE("in-place forms alias correctly", "[tile_ops]") {
  Tile a = random_tile(6);
  const Tile orig = a;
  add_tile(a, a, a);
  CHECK(lanes_match(a, [&](std::size_t k) { return orig[k] + orig[k]; }));
  zero_tile(a);
  CHECK(lanes_match(a, [](std::size_t) { return 0.0f; }));
  Tile b;
  copy_tile(orig, b);
  CHECK(lanes_match(b, [&](std::size_t k) { return orig[k]; }));
}
