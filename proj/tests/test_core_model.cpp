#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <vector>

#include "tnbody/particles.hpp"
#include "tnbody/rng.hpp"
#include "tnbody/snapshot.hpp"
#include "tnbody/tile.hpp"

using namespace tnbody;

namespace {

std::vector<double> uniform_stream(std::uint64_t seed, std::size_t n) {
  Xoshiro256 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("tilize packs whole tiles", "[core][tilize]") {
  const std::vector<double> data(2048, 1.5);
  const auto t = tilize(data);
  CHECK(t.tile_count() == 2);
  CHECK(t.logical_len == 2048);
  CHECK(t.tiles[1][1023] == 1.5f);
}

TEST_CASE("tilize pads the last tile with zeros", "[core][tilize]") {
  const auto t = tilize(std::vector<double>{5.0});
  REQUIRE(t.tile_count() == 1);
  CHECK(t.tiles[0][0] == 5.0f);
  for (std::size_t k = 1; k < kTileSize; ++k) REQUIRE(t.tiles[0][k] == 0.0f);
}

TEST_CASE("102400 values make 100 tiles", "[core][tilize]") {
  const std::vector<double> data(102400, 0.25);
  CHECK(tilize(data).tile_count() == 100);
}

TEST_CASE("tilize rejects non-finite input and names the index", "[core][tilize]") {
  std::vector<double> data(10, 1.0);
  data[7] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH(tilize(data), Catch::Matchers::ContainsSubstring("index 7"));
  data[7] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(tilize(data), InputError);
  CHECK_THROWS_AS(tilize(std::vector<double>{1.0, 2.0}, 3), InputError);
}

TEST_CASE("tile is a contiguous 32x32 row-major block", "[core][tile]") {
  static_assert(sizeof(Tile) == kTileSize * sizeof(float));
  Tile t;
  t.at(2, 5) = 7.0f;
  CHECK(t[2 * 32 + 5] == 7.0f);
  CHECK(t.data() + 69 == &t.at(2, 5));
}

TEST_CASE("untilize returns the logical elements", "[core][untilize]") {
  CHECK(untilize(tilize(std::vector<double>{1.0, 2.0, 3.0})) == std::vector<float>{1.0f, 2.0f, 3.0f});
  CHECK(untilize(tilize(std::vector<double>(1024, 0.0))) == std::vector<float>(1024, 0.0f));
}

TEST_CASE("untilize(tilize(x)) equals x rounded to FP32, bit for bit", "[core][untilize][property]") {
  const auto x = uniform_stream(20240601, 4096);
  const auto back = untilize(tilize(x));
  REQUIRE(back.size() == x.size());
  for (std::size_t k = 0; k < x.size(); ++k) REQUIRE(same_bits(back[k], static_cast<float>(x[k])));

  // Random lengths, including non-multiples of the tile size.
  Xoshiro256 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 5000);
    const auto v = uniform_stream(trial, n);
    const auto t = tilize(v);
    REQUIRE(t.tile_count() == (n + 1023) / 1024);
    const auto u = untilize(t);
    REQUIRE(u.size() == n);
    for (std::size_t k = 0; k < n; ++k) REQUIRE(same_bits(u[k], static_cast<float>(v[k])));
    for (std::size_t k = n; k < t.tile_count() * kTileSize; ++k) REQUIRE(t.element(k) == 0.0f);
  }
}

TEST_CASE("FP64 to FP32 conversion rounds to nearest even", "[core][tilize]") {
  // 1 + 2^-24 is exactly halfway between 1 and the next float; ties go to even (1.0).
  const double halfway = 1.0 + std::ldexp(1.0, -24);
  const double above = 1.0 + 3 * std::ldexp(1.0, -24);  // halfway between 1+2^-23 and 1+2^-22, ties to 1+2^-22
  const auto t = tilize(std::vector<double>{halfway, above});
  CHECK(t.tiles[0][0] == 1.0f);
  CHECK(t.tiles[0][1] == static_cast<float>(1.0 + std::ldexp(1.0, -22)));
}

TEST_CASE("replicate_for_cores splits outer tiles evenly", "[core][replicate]") {
  const auto two = replicate_for_cores(100, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].outer == TileRange{0, 50});
  CHECK(two[1].outer == TileRange{50, 100});
  CHECK(two[0].inner_count == 100);
  CHECK(two[1].inner_count == 100);

  const auto one = replicate_for_cores(5, 1);
  CHECK(one[0].outer == TileRange{0, 5});

  const auto many = replicate_for_cores(3, 4);
  std::vector<std::size_t> sizes;
  for (const auto& c : many) sizes.push_back(c.outer.size());
  CHECK(sizes == std::vector<std::size_t>{1, 1, 1, 0});

  const auto uneven = replicate_for_cores(10, 4);
  CHECK(uneven[0].outer.size() == 3);
  CHECK(uneven[1].outer.size() == 3);
  CHECK(uneven[2].outer.size() == 2);
  CHECK(uneven[3].outer.size() == 2);

  CHECK_THROWS_AS(replicate_for_cores(3, 0), ConfigError);
}

TEST_CASE("replicate_for_cores partitions completely for all sizes up to 256", "[core][replicate][property]") {
  for (std::size_t tiles = 1; tiles <= 256; ++tiles) {
    for (std::size_t cores = 1; cores <= 256; ++cores) {
      const auto parts = replicate_for_cores(tiles, cores);
      std::size_t next = 0;
      std::size_t lo = tiles, hi = 0;
      for (const auto& p : parts) {
        REQUIRE(p.outer.begin == next);  // contiguous, disjoint, ascending
        REQUIRE(p.inner_count == tiles);
        next = p.outer.end;
        lo = std::min(lo, p.outer.size());
        hi = std::max(hi, p.outer.size());
      }
      REQUIRE(next == tiles);
      REQUIRE(hi - lo <= 1);
    }
  }
}

TEST_CASE("particle system invariants", "[core][particles]") {
  auto s = ParticleSystem::with_size(3);
  s.mass = {1.0, 1.0, 1.0};
  s.x = {0.0, 1.0, 2.0};
  CHECK_NOTHROW(s.validate());

  auto bad = s;
  bad.mass[1] = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = s;
  bad.vy[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = s;
  bad.z.pop_back();
  CHECK_THROWS_AS(bad.validate(), InputError);

  auto one = ParticleSystem::with_size(1);
  one.mass = {1.0};
  CHECK_THROWS_AS(one.validate(), InputError);
}

TEST_CASE("snapshot text format round-trips doubles exactly", "[core][snapshot]") {
  auto s = ParticleSystem::with_size(4);
  Xoshiro256 rng(5);
  for (auto* v : s.arrays())
    for (auto& x : *v) x = rng.uniform(-3.0, 3.0);
  for (auto& m : s.mass) m = std::abs(m) + 1e-3;
  s.x[0] = 0.1;
  s.vz[3] = -1e-300;

  std::stringstream ss;
  write_snapshot(ss, s);
  const std::string text = ss.str();
  CHECK(text.rfind("4\n", 0) == 0);
  const auto back = read_snapshot(ss);
  CHECK(back == s);
}

TEST_CASE("snapshot parser rejects malformed input", "[core][snapshot]") {
  std::stringstream short_file("3\n1 0 0 0 0 0 0\n1 1 0 0 0 0 0\n");
  CHECK_THROWS_AS(read_snapshot(short_file), InputError);
  std::stringstream bad_field("2\n1 0 0 0 0 0 0\n1 x 0 0 0 0 0\n");
  CHECK_THROWS_AS(read_snapshot(bad_field), InputError);
  std::stringstream bad_mass("2\n1 0 0 0 0 0 0\n-1 1 0 0 0 0 0\n");
  CHECK_THROWS_AS(read_snapshot(bad_mass), InputError);
}
