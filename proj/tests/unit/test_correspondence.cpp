#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "coskel/correspondence.hpp"
#include "coskel/image_io.hpp"
#include "coskel/synthetic.hpp"
#include "shapes.hpp"

using namespace coskel;
namespace fs = std::filesystem;

namespace {

Raster textured(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Smooth random blobs so descriptors vary over the image.
  Raster r(w, h, {0.5, 0.5, 0.5});
  for (int k = 0; k < 40; ++k) {
    const double cx = u(rng) * w, cy = u(rng) * h, rad = 2.0 + 5.0 * u(rng);
    const Color c{u(rng), u(rng), u(rng)};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (std::hypot(x - cx, y - cy) < rad) r(x, y) = c;
  }
  return r;
}

}  // namespace

TEST_CASE("descriptors of a constant image are zero") {
  const DescriptorField d = dense_descriptors(Raster(20, 16, {0.3, 0.3, 0.3}), {});
  CHECK(std::all_of(d.data.begin(), d.data.end(), [](float v) { return v == 0.0f; }));
  CHECK(d.data.size() == 20u * 16u * kDescriptorSize);
}

TEST_CASE("descriptors are deterministic") {
  const Raster r = textured(32, 24, 1);
  const Raster copy = r;
  CHECK(dense_descriptors(r, {}).data == dense_descriptors(copy, {}).data);
}

TEST_CASE("vertical step edge is dominated by the horizontal-gradient bin") {
  Raster r(32, 32, {0.1, 0.1, 0.1});
  for (int y = 0; y < 32; ++y)
    for (int x = 16; x < 32; ++x) r(x, y) = {0.9, 0.9, 0.9};
  const DescriptorField d = dense_descriptors(r, {});
  const float* v = d.at(16, 16);
  std::array<double, 8> per_bin{};
  for (int k = 0; k < kDescriptorSize; ++k) per_bin[static_cast<std::size_t>(k % 8)] += v[k];
  CHECK(std::max_element(per_bin.begin(), per_bin.end()) - per_bin.begin() == 0);
  for (int b = 1; b < 8; ++b) CHECK(per_bin[static_cast<std::size_t>(b)] == 0.0);
  double norm = 0.0;
  for (int k = 0; k < kDescriptorSize; ++k) norm += static_cast<double>(v[k]) * v[k];
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("flow between an image and itself has the zero-flow energy") {
  const Raster r = textured(64, 48, 2);
  const FlowConfig cfg;
  const FlowField f = compute_flow(r, r, cfg);
  const DescriptorField d = dense_descriptors(r, cfg);
  CHECK(flow_energy(d, d, f, cfg) == flow_energy(d, d, identity_flow(64, 48, 64, 48), cfg));
  CHECK(flow_energy(d, d, f, cfg) == 0.0);
}

TEST_CASE("flow recovers a horizontal translation") {
  const Raster src = textured(80, 60, 3);
  Raster dst(80, 60);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x) dst(x, y) = src(std::max(0, x - 5), y);
  const FlowField f = compute_flow(src, dst, {});
  CHECK(f.valid());
  std::vector<int> dx, dy;
  for (int y = 12; y < 48; ++y)
    for (int x = 12; x < 62; ++x) {
      dx.push_back(f(x, y).dx);
      dy.push_back(f(x, y).dy);
    }
  std::nth_element(dx.begin(), dx.begin() + static_cast<long>(dx.size() / 2), dx.end());
  std::nth_element(dy.begin(), dy.begin() + static_cast<long>(dy.size() / 2), dy.end());
  CHECK(std::abs(dx[dx.size() / 2] - 5) <= 1);
  CHECK(std::abs(dy[dy.size() / 2]) <= 1);
}

TEST_CASE("textureless pair gives a constant flow") {
  const FlowField f = compute_flow(Raster(40, 30, {0.2, 0.4, 0.6}), Raster(40, 30, {0.7, 0.1, 0.3}), {});
  for (const Displacement& d : f.values()) CHECK(d == f[0]);
}

TEST_CASE("flow energy never increases within a pyramid level") {
  const Raster a = textured(96, 64, 4);
  const Raster b = textured(96, 64, 5);
  FlowStats stats;
  const FlowField f = compute_flow(a, b, {}, &stats);
  CHECK(f.valid());
  REQUIRE_FALSE(stats.level_energies.empty());
  for (const auto& level : stats.level_energies)
    for (std::size_t k = 1; k < level.size(); ++k) CHECK(level[k] <= level[k - 1]);
}

TEST_CASE("flow is deterministic and handles unequal sizes") {
  const Raster a = textured(70, 50, 6);
  const Raster b = textured(45, 60, 7);
  const FlowField f1 = compute_flow(a, b, {});
  const FlowField f2 = compute_flow(a, b, {});
  CHECK(f1 == f2);
  CHECK(f1.width() == 70);
  CHECK(f1.target_width() == 45);
  CHECK(f1.valid());
  const Raster big = textured(400, 300, 8);
  const FlowField g = compute_flow(big, a, {});
  CHECK(g.width() == 400);
  CHECK(g.valid());
}

TEST_CASE("warp examples") {
  ScalarMap m(20, 10);
  m(12, 7) = 1.0;
  const ScalarMap same = warp_map(identity_flow(20, 10, 20, 10), m);
  CHECK(same == m);
  const ScalarMap shifted = warp_map(constant_flow(15, 10, 20, 10, {5, 0}), m);
  CHECK(shifted(7, 7) == 1.0);
  double total = 0.0;
  for (double v : shifted.values()) total += v;
  CHECK(total == 1.0);

  std::mt19937_64 rng(3);
  const BinaryMask mask = coskel::testing::random_mask(20, 10, 0.5, rng);
  std::uniform_int_distribution<int> off(-3, 3);
  FlowField f(20, 10, 20, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) {
      const int tx = std::clamp(x + off(rng), 0, 19), ty = std::clamp(y + off(rng), 0, 9);
      f(x, y) = {static_cast<std::int16_t>(tx - x), static_cast<std::int16_t>(ty - y)};
    }
  const ScalarMap warped = warp_map(f, ScalarMap::from_mask(mask));
  for (double v : warped.values()) CHECK((v == 0.0 || v == 1.0));
  CHECK(warp_mask(f, mask) == warp_mask(f, mask));

  ScalarMap r(20, 10);
  std::uniform_real_distribution<double> u(0.2, 0.7);
  for (auto& v : r.values()) v = u(rng);
  const ScalarMap wr = warp_map(f, r);
  CHECK(wr.min_value() >= r.min_value());
  CHECK(wr.max_value() <= r.max_value());
  CHECK_THROWS_AS(warp_map(f, ScalarMap(19, 10)), DimensionMismatch);
}

TEST_CASE("smooth flows preserve connected components") {
  const BinaryMask disk = coskel::testing::disk_mask(60, 60, 30, 30, 12);
  const BinaryMask bar = capsule_union(60, 60, {{10, 20, 50, 40}}, 4);
  for (int amp = 1; amp <= 4; ++amp) {
    FlowField f(60, 60, 60, 60);
    for (int y = 0; y < 60; ++y)
      for (int x = 0; x < 60; ++x) {
        const int dx = static_cast<int>(std::lround(amp * std::sin(y / 9.0)));
        const int dy = static_cast<int>(std::lround(amp * std::cos(x / 11.0)));
        f(x, y) = {static_cast<std::int16_t>(std::clamp(x + dx, 0, 59) - x),
                   static_cast<std::int16_t>(std::clamp(y + dy, 0, 59) - y)};
      }
    CHECK(count_components(warp_mask(f, disk)) == 1);
    CHECK(count_components(warp_mask(f, bar)) == 1);
  }
}

TEST_CASE("identity flow maps proportionally between sizes") {
  const FlowField f = identity_flow(10, 10, 20, 5);
  CHECK(f.valid());
  CHECK(f.target(0, 0) == Pixel{1, 0});
  CHECK(f.target(9, 9) == Pixel{19, 4});
  CHECK_THROWS(constant_flow(10, 10, 10, 10, {1, 0}));
}

TEST_CASE("flow file round trip and layout") {
  const fs::path dir = fs::temp_directory_path() / "coskel_test_flow";
  fs::create_directories(dir);
  const Raster a = textured(30, 20, 9), b = textured(25, 22, 10);
  const FlowField f = compute_flow(a, b, {});
  write_flow(dir / "f.flow", f);
  CHECK(fs::file_size(dir / "f.flow") == 8u + 30u * 20u * 4u);
  std::ifstream is(dir / "f.flow", std::ios::binary);
  unsigned char head[8];
  is.read(reinterpret_cast<char*>(head), 8);
  CHECK((head[0] | head[1] << 8) == 30);
  CHECK((head[4] | head[5] << 8) == 20);
  CHECK(read_flow(dir / "f.flow", 25, 22) == f);
  CHECK_THROWS_AS(read_flow(dir / "f.flow", 3, 3), IoError);
  fs::resize_file(dir / "f.flow", 100);
  CHECK_THROWS_AS(read_flow(dir / "f.flow", 25, 22), IoError);
}

TEST_CASE("config hash separates settings") {
  FlowConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.smoothness_weight = 0.5;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("cached provider stores and reuses flows") {
  const fs::path dir = fs::temp_directory_path() / "coskel_test_flow_cache";
  fs::remove_all(dir);
  const Raster a = textured(40, 30, 11), b = textured(40, 30, 12);
  const CachedFlowProvider cache(dir, {});
  const FlowField first = cache.flow({"a", &a}, {"b", &b});
  const fs::path p = cache.cache_path("a", "b");
  CHECK(fs::exists(p));
  CHECK(p.filename().string().starts_with("a__b__"));
  CHECK(first == DenseFlowProvider(FlowConfig{}).flow({"a", &a}, {"b", &b}));
  CHECK(cache.flow({"a", &a}, {"b", &b}) == first);
  CHECK(IdentityFlowProvider().flow({"a", &a}, {"b", &b}) == identity_flow(40, 30, 40, 30));
}
