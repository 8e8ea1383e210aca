#include <doctest.h>

#include <random>

#include "coskel/raster.hpp"
#include "shapes.hpp"

using namespace coskel;
using coskel::testing::random_mask;

TEST_CASE("mask_iou basic cases") {
  const BinaryMask a = coskel::testing::rect_mask(4, 4, 0, 0, 1, 1);
  CHECK(mask_iou(a, a) == 1.0);
  CHECK(mask_iou(a, coskel::testing::rect_mask(4, 4, 2, 2, 3, 3)) == 0.0);

  BinaryMask p(2, 2), q(2, 2);
  p.set(0, 0);
  p.set(0, 1);
  q.set(0, 1);
  q.set(1, 1);
  CHECK(mask_iou(p, q) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("mask_iou empty masks") {
  const BinaryMask e(3, 3);
  CHECK(mask_iou(e, e) == 1.0);
  BinaryMask one(3, 3);
  one.set(1, 1);
  CHECK(mask_iou(e, one) == 0.0);
  CHECK(mask_iou(one, e) == 0.0);
}

TEST_CASE("mask_iou rejects mismatched shapes") {
  CHECK_THROWS_AS(mask_iou(BinaryMask(2, 2), BinaryMask(2, 3)), DimensionMismatch);
}

TEST_CASE("mask_iou properties on random masks") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const BinaryMask a = random_mask(7, 5, 0.4, rng);
    const BinaryMask b = random_mask(7, 5, 0.4, rng);
    const double ab = mask_iou(a, b);
    CHECK(ab == mask_iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (a.any()) CHECK(mask_iou(a, a) == 1.0);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      inter += a[i] && b[i];
      uni += a[i] || b[i];
    }
    if (uni > 0) CHECK(ab == static_cast<double>(inter) / static_cast<double>(uni));
  }
}

TEST_CASE("neighborhood_sum examples") {
  const ScalarMap zero(6, 6, 0.0);
  CHECK(neighborhood_sum(zero, {3, 3}, PixelNeighborhood(2)) == 0.0);
  const ScalarMap ones(6, 6, 1.0);
  CHECK(neighborhood_sum(ones, {3, 3}, PixelNeighborhood(1)) == 9.0);
  CHECK(neighborhood_sum(ones, {0, 0}, PixelNeighborhood(1)) == 4.0);
  CHECK(neighborhood_sum(ones, {5, 2}, PixelNeighborhood(1)) == 6.0);
  CHECK_THROWS(neighborhood_sum(ones, {6, 0}, PixelNeighborhood(1)));
  CHECK_THROWS(neighborhood_sum(ones, {-1, 0}, PixelNeighborhood(1)));
}

TEST_CASE("neighborhood_sum properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarMap m(9, 7);
  for (auto& v : m.values()) v = u(rng);
  const IntegralImage integral(m);
  for (int r = 0; r <= 4; ++r) {
    const PixelNeighborhood n(r);
    const ScalarMap box = box_sum(m, n, Exec::serial);
    CHECK(box == box_sum(m, n, Exec::parallel));
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        double brute = 0.0;
        int count = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            if (m.contains(x + dx, y + dy)) {
              brute += m(x + dx, y + dy);
              ++count;
            }
        const double s = neighborhood_sum(m, {x, y}, n);
        CHECK(s == doctest::Approx(brute).epsilon(1e-12));
        CHECK(box(x, y) == doctest::Approx(brute).epsilon(1e-12));
        CHECK(integral.window_count({x, y}, n) == count);
        CHECK(s <= n.side() * n.side() * m.max_value() + 1e-12);
        if (r == 0) CHECK(s == doctest::Approx(m(x, y)).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("pixel neighborhood rejects negative radius") { CHECK_THROWS(PixelNeighborhood(-1)); }

TEST_CASE("raster validation") {
  Raster r(2, 2, {0.5, 0.5, 0.5});
  CHECK_NOTHROW(r.validate());
  r(1, 1) = {1.2, 0.0, 0.0};
  CHECK_THROWS(r.validate());
  CHECK_THROWS(Raster().validate());
}

TEST_CASE("mask algebra") {
  std::mt19937_64 rng(3);
  const BinaryMask a = random_mask(6, 6, 0.5, rng);
  const BinaryMask b = random_mask(6, 6, 0.5, rng);
  CHECK(mask_intersection(a, b).subset_of(a));
  CHECK(a.subset_of(mask_union(a, b)));
  CHECK(mask_union(mask_difference(a, b), mask_intersection(a, b)) == a);
  CHECK(mask_complement(mask_complement(a)) == a);
  CHECK(mask_union(a, mask_complement(a)).count() == a.size());
}

TEST_CASE("components and bounding boxes") {
  const BinaryMask m = coskel::testing::mask_from_rows({
      "##....",
      ".#..#.",
      "....##",
      "#.....",
  });
  CHECK(count_components(m) == 3);
  CHECK(largest_component(m).count() == 3);
  const BoundingBox bb = bounding_box(m);
  CHECK(bb.x0 == 0);
  CHECK(bb.y0 == 0);
  CHECK(bb.x1 == 5);
  CHECK(bb.y1 == 3);
  CHECK(bounding_box(BinaryMask(3, 3)).empty());
  CHECK(dilate(coskel::testing::rect_mask(5, 5, 2, 2, 2, 2), 1).count() == 9);
}
