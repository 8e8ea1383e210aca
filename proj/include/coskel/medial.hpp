#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "coskel/raster.hpp"

namespace coskel {

/// Squared Euclidean distance from every pixel to the nearest `sites` pixel.
/// Pixels are left at `kNoSite` when the mask has no site at all.
inline constexpr std::int64_t kNoSite = INT64_MAX / 4;
Grid<std::int64_t> squared_distance_to_sites(const BinaryMask& sites, Exec exec = Exec::parallel);

/// Squared distance from each foreground pixel to the nearest background pixel, where the
/// frame just outside the image counts as background. Zero on background.
Grid<std::int64_t> squared_distance_transform(const BinaryMask& shape,
                                              Exec exec = Exec::parallel);

/// Exact Euclidean distance transform (square root of the above).
ScalarMap distance_transform(const BinaryMask& shape, Exec exec = Exec::parallel);

/// Medial axis of a shape together with the maximal-disk radius at every axis pixel.
/// Invariant: radius > 0 exactly on skeleton pixels, and each disk lies inside `shape`.
struct SkeletonGeometry {
  BinaryMask shape;
  BinaryMask skeleton;
  ScalarMap radius;
};

/// One-pixel-wide, topology-preserving medial axis. Throws PreconditionError on an empty shape.
SkeletonGeometry medial_axis(const BinaryMask& shape, Exec exec = Exec::parallel);

/// Geometry whose skeleton is replaced by `kept` (which must be a subset of geom.skeleton).
SkeletonGeometry restrict_geometry(const SkeletonGeometry& geom, const BinaryMask& kept);

/// Centers of maximal inscribed disks: a shape pixel whose disk {q : |q-p| < D(p)} is not
/// contained in the disk of any 8-neighbour.
BinaryMask maximal_disk_centers(const BinaryMask& shape, const Grid<std::int64_t>& sq_dist);

/// Union of the discrete disks {q in shape : |q-p| <= r(p) + 0.5} over kept pixels.
BinaryMask reconstruct_shape(const SkeletonGeometry& geom, const BinaryMask& kept);

/// Visits every in-bounds shape pixel of the reconstruction disk at `center`.
template <typename Fn>
void for_each_disk_pixel(const SkeletonGeometry& geom, Pixel center, Fn&& fn);

/// Whether removing `p` from `m` preserves topology (8-connected foreground, 4-connected
/// background). Isolated and interior pixels are never simple.
bool is_simple_point(const BinaryMask& m, int x, int y);
int neighbor_count(const BinaryMask& m, int x, int y);

struct Branch {
  /// Ordered 8-connected path; includes the junction pixels it attaches to at either end.
  std::vector<Pixel> path;
  /// Pixels of the path that are not junction pixels.
  int length = 0;
  /// Junction cluster index at each end, -1 at a free end.
  std::array<int, 2> ends{-1, -1};
  /// At least one end is a skeleton endpoint.
  bool terminal = false;
  /// Junction-free cycle.
  bool closed = false;

  std::vector<Pixel> own_pixels(const BinaryMask& junction_mask) const;
};

struct SkeletonGraph {
  std::vector<Branch> branches;
  std::vector<Pixel> junctions;
  std::vector<Pixel> endpoints;
  std::vector<std::vector<Pixel>> junction_clusters;
  BinaryMask junction_mask;

  /// Junction pixels count once: sum of branch lengths plus junction pixel count.
  std::size_t total_length() const;
};

/// Decomposes a one-pixel-wide skeleton into maximal junction-free paths.
SkeletonGraph extract_branches(const BinaryMask& skeleton);

/// Removes the own pixels of graph.branches[index] (which must be terminal) and then strips
/// junction pixels left redundant at its attachment cluster.
BinaryMask remove_branch(const BinaryMask& skeleton, const SkeletonGraph& graph,
                         std::size_t index);

// ---------------------------------------------------------------------------

namespace detail {
/// Squared reach of the reconstruction disk of radius r.
inline double disk_bound_sq(double radius) { return (radius + 0.5) * (radius + 0.5); }
}  // namespace detail

template <typename Fn>
void for_each_disk_pixel(const SkeletonGeometry& geom, Pixel center, Fn&& fn) {
  const double r = geom.radius(center);
  if (r <= 0.0) return;
  const double bound = detail::disk_bound_sq(r);
  const int reach = static_cast<int>(r + 0.5);
  const int h = geom.shape.height();
  const int w = geom.shape.width();
  for (int dy = -reach; dy <= reach; ++dy) {
    const int y = center.y + dy;
    if (y < 0 || y >= h) continue;
    const double rem = bound - static_cast<double>(dy) * dy;
    if (rem < 0.0) continue;
    int half = static_cast<int>(std::sqrt(rem));
    while (static_cast<double>(half + 1) * (half + 1) <= rem) ++half;
    while (half > 0 && static_cast<double>(half) * half > rem) --half;
    const int x0 = std::max(0, center.x - half);
    const int x1 = std::min(w - 1, center.x + half);
    for (int x = x0; x <= x1; ++x)
      if (geom.shape.test(x, y)) fn(Pixel{x, y});
  }
}

}  // namespace coskel
