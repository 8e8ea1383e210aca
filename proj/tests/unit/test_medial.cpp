#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "coskel/medial.hpp"
#include "shapes.hpp"

using namespace coskel;
using namespace coskel::testing;

namespace {

// Squared distance to the nearest background pixel, the one-pixel frame outside included.
Grid<std::int64_t> brute_sq_edt(const BinaryMask& m) {
  Grid<std::int64_t> out(m.width(), m.height(), 0);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.test(x, y)) continue;
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (int by = -1; by <= m.height(); ++by)
        for (int bx = -1; bx <= m.width(); ++bx) {
          if (m.test_clipped(bx, by)) continue;
          const std::int64_t dx = bx - x, dy = by - y;
          best = std::min(best, dx * dx + dy * dy);
        }
      out(x, y) = best;
    }
  return out;
}

Grid<std::int64_t> brute_sq_sites(const BinaryMask& sites) {
  Grid<std::int64_t> out(sites.width(), sites.height(), kNoSite);
  for (int y = 0; y < sites.height(); ++y)
    for (int x = 0; x < sites.width(); ++x)
      for (const Pixel s : sites.pixels()) {
        const std::int64_t dx = s.x - x, dy = s.y - y;
        out(x, y) = std::min(out(x, y), dx * dx + dy * dy);
      }
  return out;
}

// Integer points strictly inside the disk of squared radius d2 around p.
bool disk_contained(Pixel p, std::int64_t dp, Pixel q, std::int64_t dq) {
  const int reach = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dp)))) + 1;
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx) {
      if (static_cast<std::int64_t>(dx) * dx + static_cast<std::int64_t>(dy) * dy >= dp) continue;
      const std::int64_t ex = p.x + dx - q.x, ey = p.y + dy - q.y;
      if (ex * ex + ey * ey >= dq) return false;
    }
  return true;
}

BinaryMask brute_maximal_centers(const BinaryMask& shape, const Grid<std::int64_t>& sq) {
  BinaryMask out(shape.width(), shape.height());
  for (const Pixel p : shape.pixels()) {
    bool maximal = true;
    for (int dy = -1; dy <= 1 && maximal; ++dy)
      for (int dx = -1; dx <= 1 && maximal; ++dx) {
        if ((dx == 0 && dy == 0) || !shape.test_clipped(p.x + dx, p.y + dy)) continue;
        const Pixel q{p.x + dx, p.y + dy};
        if (disk_contained(p, sq(p), q, sq(q))) maximal = false;
      }
    out.set(p, maximal);
  }
  return out;
}

// Thin: every pixel is an endpoint or its removal would change the topology.
bool fully_thinned(const BinaryMask& m) {
  for (const Pixel p : m.pixels())
    if (neighbor_count(m, p.x, p.y) >= 2 && is_simple_point(m, p.x, p.y)) return false;
  return true;
}

}  // namespace

TEST_CASE("distance transform examples") {
  CHECK(distance_transform(BinaryMask(6, 6)).max_value() == 0.0);
  BinaryMask single(5, 5);
  single.set(2, 2);
  const ScalarMap d1 = distance_transform(single);
  CHECK(d1(2, 2) == 1.0);
  CHECK(d1(1, 2) == 0.0);
  const BinaryMask block = rect_mask(9, 9, 2, 2, 6, 6);
  CHECK(distance_transform(block)(4, 4) == 3.0);
  CHECK(distance_transform(rect_mask(5, 5, 0, 0, 4, 4))(2, 2) == 3.0);
}

TEST_CASE("distance transform matches brute force") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 3 + trial % 10, h = 2 + (trial * 7) % 11;
    const BinaryMask m = random_mask(w, h, trial % 3 == 0 ? 0.9 : 0.6, rng);
    const auto brute = brute_sq_edt(m);
    CHECK(squared_distance_transform(m, Exec::serial) == brute);
    CHECK(squared_distance_transform(m, Exec::parallel) == brute);
    const ScalarMap d = distance_transform(m);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(d[i] == std::sqrt(static_cast<double>(brute[i])));
  }
}

TEST_CASE("distance to sites matches brute force") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const BinaryMask s = random_mask(3 + trial % 9, 4 + trial % 5, 0.1, rng);
    CHECK(squared_distance_to_sites(s, Exec::serial) == brute_sq_sites(s));
    CHECK(squared_distance_to_sites(s, Exec::parallel) == brute_sq_sites(s));
  }
}

TEST_CASE("maximal disk centers match the discrete containment oracle") {
  std::mt19937_64 rng(9);
  std::vector<BinaryMask> shapes;
  for (int t = 0; t < 30; ++t) shapes.push_back(random_mask(12, 10, 0.75, rng));
  shapes.push_back(rect_mask(11, 5, 1, 1, 9, 3));
  shapes.push_back(disk_mask(25, 25, 12, 12, 9));
  shapes.push_back(capsule_union(30, 30, {{5, 5, 25, 20}}, 4));
  for (const BinaryMask& s : shapes) {
    const auto sq = squared_distance_transform(s);
    CHECK(maximal_disk_centers(s, sq) == brute_maximal_centers(s, sq));
  }
}

TEST_CASE("medial axis examples") {
  SUBCASE("disk of radius 10") {
    const BinaryMask d = disk_mask(31, 31, 15, 15, 10);
    const SkeletonGeometry g = medial_axis(d);
    REQUIRE(g.skeleton.any());
    for (const Pixel p : g.skeleton.pixels()) CHECK(std::hypot(p.x - 15.0, p.y - 15.0) <= 2.0);
  }
  SUBCASE("3x9 rectangle") {
    const BinaryMask r = rect_mask(9, 3, 0, 0, 8, 2);
    const SkeletonGeometry g = medial_axis(r);
    REQUIRE(g.skeleton.any());
    for (const Pixel p : g.skeleton.pixels()) CHECK(p.y == 1);
    CHECK(count_components(g.skeleton) == 1);
  }
  SUBCASE("single pixel") {
    BinaryMask s(5, 4);
    s.set(2, 1);
    const SkeletonGeometry g = medial_axis(s);
    CHECK(g.skeleton == s);
    CHECK(g.radius(2, 1) == 1.0);
  }
  CHECK_THROWS_AS(medial_axis(BinaryMask(4, 4)), PreconditionError);
}

TEST_CASE("medial axis invariants on the shape suite") {
  for (const BinaryMask& s : shape_suite()) {
    const SkeletonGeometry g = medial_axis(s);
    CHECK(g.skeleton.subset_of(s));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK((g.radius[i] > 0.0) == (g.skeleton[i] != 0));
    const BinaryMask r = reconstruct_shape(g, g.skeleton);
    CHECK(r.subset_of(s));
    CHECK(mask_iou(r, s) >= 0.95);
    CHECK(count_components(g.skeleton) == 1);
    CHECK(fully_thinned(g.skeleton));
    CHECK(medial_axis(s, Exec::serial).skeleton == g.skeleton);
    const SkeletonGraph graph = extract_branches(g.skeleton);
    CHECK(graph.total_length() == g.skeleton.count());
  }
}

TEST_CASE("reconstruct_shape examples") {
  const BinaryMask disk = disk_mask(31, 31, 15, 15, 10);
  const SkeletonGeometry g = medial_axis(disk);
  CHECK_FALSE(reconstruct_shape(g, BinaryMask(31, 31)).any());

  Pixel center = g.skeleton.pixels().front();
  for (const Pixel p : g.skeleton.pixels())
    if (g.radius(p) > g.radius(center)) center = p;
  BinaryMask one(31, 31);
  one.set(center);
  CHECK(mask_iou(reconstruct_shape(g, one), disk) >= 0.95);

  const BinaryMask rect = rect_mask(40, 12, 2, 2, 37, 9);
  const SkeletonGeometry gr = medial_axis(rect);
  const auto px = gr.skeleton.pixels();
  int xmin = 1000, xmax = -1;
  for (const Pixel p : px) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  BinaryMask half(40, 12);
  for (const Pixel p : px)
    if (p.x <= (xmin + xmax) / 2) half.set(p);
  const std::size_t area = reconstruct_shape(gr, half).count();
  CHECK(area > rect.count() / 2);
  CHECK(area < rect.count());

  BinaryMask stray(31, 31);
  stray.set(0, 0);
  CHECK_THROWS_AS(reconstruct_shape(g, stray), PreconditionError);
}

TEST_CASE("reconstruction is inside the shape and monotone") {
  std::mt19937_64 rng(21);
  const auto suite = shape_suite();
  for (const BinaryMask& s : suite) {
    const SkeletonGeometry g = medial_axis(s);
    const auto px = g.skeleton.pixels();
    for (int t = 0; t < 10; ++t) {
      BinaryMask k1(s.width(), s.height()), k2(s.width(), s.height());
      std::bernoulli_distribution coin(0.5);
      for (const Pixel p : px) {
        const bool a = coin(rng);
        k2.set(p, a || coin(rng));
        k1.set(p, a);
      }
      const BinaryMask r1 = reconstruct_shape(g, k1);
      const BinaryMask r2 = reconstruct_shape(g, k2);
      CHECK(r1.subset_of(s));
      CHECK(r1.subset_of(r2));
    }
  }
}

TEST_CASE("branch extraction examples") {
  BinaryMask line(14, 3);
  for (int x = 2; x < 12; ++x) line.set(x, 1);
  const SkeletonGraph g1 = extract_branches(line);
  REQUIRE(g1.branches.size() == 1);
  CHECK(g1.branches[0].length == 10);
  CHECK(g1.junctions.empty());
  CHECK(g1.endpoints.size() == 2);

  BinaryMask y(21, 21);
  y.set(10, 10);
  for (int k = 1; k <= 5; ++k) {
    y.set(10, 10 - k);
    y.set(10 - k, 10 + k);
    y.set(10 + k, 10 + k);
  }
  const SkeletonGraph g2 = extract_branches(y);
  CHECK(g2.branches.size() == 3);
  REQUIRE(g2.junctions.size() == 1);
  CHECK(g2.junctions[0] == Pixel{10, 10});
  for (const Branch& b : g2.branches) {
    CHECK(b.length == 5);
    CHECK(b.terminal);
  }
  CHECK(g2.total_length() == y.count());

  CHECK(extract_branches(BinaryMask(6, 6)).branches.empty());
}

TEST_CASE("branch paths are 8-connected and cover the skeleton") {
  for (const BinaryMask& s : shape_suite()) {
    const SkeletonGeometry g = medial_axis(s);
    const SkeletonGraph graph = extract_branches(g.skeleton);
    BinaryMask covered(s.width(), s.height());
    for (const Branch& b : graph.branches) {
      for (std::size_t k = 0; k < b.path.size(); ++k) {
        covered.set(b.path[k]);
        if (k > 0) {
          CHECK(std::abs(b.path[k].x - b.path[k - 1].x) <= 1);
          CHECK(std::abs(b.path[k].y - b.path[k - 1].y) <= 1);
        }
      }
    }
    for (const Pixel p : graph.junctions) covered.set(p);
    CHECK(covered == g.skeleton);
  }
}

TEST_CASE("simple points") {
  const BinaryMask line = mask_from_rows({"#####"});
  CHECK(is_simple_point(line, 0, 0));
  CHECK_FALSE(is_simple_point(line, 2, 0));
  BinaryMask dot(3, 3);
  dot.set(1, 1);
  CHECK_FALSE(is_simple_point(dot, 1, 1));
  const BinaryMask full = rect_mask(3, 3, 0, 0, 2, 2);
  CHECK_FALSE(is_simple_point(full, 1, 1));
  CHECK(is_simple_point(full, 0, 0));
}
