#include "coskel/medial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace coskel {

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) over one row of squared column
// distances. `f` holds kNoSite where no site exists in the column.
void envelope_1d(const std::int64_t* f, int n, std::int64_t* out, std::vector<int>& v,
                 std::vector<double>& z) {
  v.resize(static_cast<std::size_t>(n));
  z.resize(static_cast<std::size_t>(n) + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kNoSite) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -INFINITY;
      z[1] = INFINITY;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = (static_cast<double>(f[q] + static_cast<std::int64_t>(q) * q) -
           static_cast<double>(f[p] + static_cast<std::int64_t>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates from the left.
      v[0] = q;
      z[0] = -INFINITY;
      z[1] = INFINITY;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = INFINITY;
  }
  if (k < 0) {
    std::fill(out, out + n, kNoSite);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const std::int64_t d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

Grid<std::int64_t> squared_distance_to_sites(const BinaryMask& sites, Exec exec) {
  const int w = sites.width();
  const int h = sites.height();
  Grid<std::int64_t> col(w, h, kNoSite);

  // Column pass: distance to the nearest site in the same column.
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int x = 0; x < w; ++x) {
    std::int64_t last = -1;
    for (int y = 0; y < h; ++y) {
      if (sites.test(x, y)) last = y;
      if (last >= 0) col(x, y) = (y - last) * (y - last);
    }
    last = -1;
    for (int y = h - 1; y >= 0; --y) {
      if (sites.test(x, y)) last = y;
      if (last >= 0) col(x, y) = std::min(col(x, y), (last - y) * (last - y));
    }
  }

  Grid<std::int64_t> out(w, h, kNoSite);
#pragma omp parallel if (exec == Exec::parallel)
  {
    std::vector<int> v;
    std::vector<double> z;
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) envelope_1d(&col(0, y), w, &out(0, y), v, z);
  }
  return out;
}

Grid<std::int64_t> squared_distance_transform(const BinaryMask& shape, Exec exec) {
  const int w = shape.width();
  const int h = shape.height();
  BinaryMask padded(w + 2, h + 2, true);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) padded.set(x + 1, y + 1, !shape.test(x, y));
  const Grid<std::int64_t> full = squared_distance_to_sites(padded, exec);
  Grid<std::int64_t> out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = shape.test(x, y) ? full(x + 1, y + 1) : 0;
  return out;
}

ScalarMap distance_transform(const BinaryMask& shape, Exec exec) {
  const Grid<std::int64_t> sq = squared_distance_transform(shape, exec);
  ScalarMap out(shape.width(), shape.height());
  for (std::size_t i = 0; i < sq.size(); ++i) out[i] = std::sqrt(static_cast<double>(sq[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Topology

namespace {

// Neighbour ring, counter-clockwise starting east.
constexpr std::array<int, 8> kRingDx{1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kRingDy{0, -1, -1, -1, 0, 1, 1, 1};

// Bit i of the code = ring position i is foreground.
std::array<bool, 256> build_simple_table() {
  std::array<bool, 256> table{};
  for (int code = 0; code < 256; ++code) {
    auto fg = [&](int i) { return ((code >> i) & 1) != 0; };
    auto adjacent8 = [](int a, int b) {
      return std::abs(kRingDx[a] - kRingDx[b]) <= 1 && std::abs(kRingDy[a] - kRingDy[b]) <= 1;
    };
    auto adjacent4 = [](int a, int b) {
      return std::abs(kRingDx[a] - kRingDx[b]) + std::abs(kRingDy[a] - kRingDy[b]) == 1;
    };
    auto count_components = [&](bool want_fg, bool four, bool only_touching_4) {
      std::array<int, 8> label{};
      label.fill(-1);
      int components = 0;
      for (int s = 0; s < 8; ++s) {
        if (fg(s) != want_fg || label[s] >= 0) continue;
        std::vector<int> stack{s};
        label[s] = components;
        bool touches = false;
        while (!stack.empty()) {
          const int c = stack.back();
          stack.pop_back();
          if (c % 2 == 0) touches = true;  // even ring positions are 4-neighbours of p
          for (int n = 0; n < 8; ++n) {
            if (fg(n) != want_fg || label[n] >= 0) continue;
            if (four ? adjacent4(c, n) : adjacent8(c, n)) {
              label[n] = components;
              stack.push_back(n);
            }
          }
        }
        if (!only_touching_4 || touches) ++components;
      }
      return components;
    };
    table[code] = count_components(true, false, false) == 1 && count_components(false, true, true) == 1;
  }
  return table;
}

const std::array<bool, 256>& simple_table() {
  static const std::array<bool, 256> table = build_simple_table();
  return table;
}

int ring_code(const BinaryMask& m, int x, int y) {
  int code = 0;
  for (int i = 0; i < 8; ++i)
    if (m.test_clipped(x + kRingDx[i], y + kRingDy[i])) code |= 1 << i;
  return code;
}

}  // namespace

bool is_simple_point(const BinaryMask& m, int x, int y) {
  return simple_table()[static_cast<std::size_t>(ring_code(m, x, y))];
}

int neighbor_count(const BinaryMask& m, int x, int y) {
  int n = 0;
  for (int i = 0; i < 8; ++i) n += m.test_clipped(x + kRingDx[i], y + kRingDy[i]) ? 1 : 0;
  return n;
}

// ---------------------------------------------------------------------------
// Medial axis

namespace {

// Largest |v - e|^2 over the open disk |v|^2 < d2, for e axis-aligned and diagonal. A neighbour
// q at offset e contains p's disk exactly when D2(q) exceeds this bound.
struct ContainmentBounds {
  std::int64_t axis;
  std::int64_t diagonal;
};

ContainmentBounds containment_bounds(std::int64_t d2) {
  ContainmentBounds b{0, 0};
  bool first = true;
  for (std::int64_t vy = 0; vy * vy < d2; ++vy) {
    // Largest a with a^2 + vy^2 < d2.
    std::int64_t a = static_cast<std::int64_t>(std::sqrt(static_cast<double>(d2 - 1 - vy * vy)));
    while ((a + 1) * (a + 1) + vy * vy < d2) ++a;
    while (a > 0 && a * a + vy * vy >= d2) --a;
    // Farthest points from e lie at vx = -a; both signs of vy are checked for the diagonal.
    const std::int64_t ax = (a + 1) * (a + 1) + vy * vy;
    const std::int64_t dg = std::max((a + 1) * (a + 1) + (vy + 1) * (vy + 1),
                                     (a + 1) * (a + 1) + (vy - 1) * (vy - 1));
    if (first || ax > b.axis) b.axis = ax;
    if (first || dg > b.diagonal) b.diagonal = dg;
    first = false;
  }
  return b;
}

}  // namespace

BinaryMask maximal_disk_centers(const BinaryMask& shape, const Grid<std::int64_t>& sq_dist) {
  require_same_shape(shape, sq_dist, "maximal_disk_centers");
  std::unordered_map<std::int64_t, ContainmentBounds> cache;
  BinaryMask centers(shape.width(), shape.height());
  for (int y = 0; y < shape.height(); ++y) {
    for (int x = 0; x < shape.width(); ++x) {
      if (!shape.test(x, y)) continue;
      const std::int64_t d2 = sq_dist(x, y);
      auto it = cache.find(d2);
      if (it == cache.end()) it = cache.emplace(d2, containment_bounds(d2)).first;
      const ContainmentBounds& b = it->second;
      bool maximal = true;
      for (int i = 0; i < 8 && maximal; ++i) {
        const int nx = x + kRingDx[i];
        const int ny = y + kRingDy[i];
        if (!shape.test_clipped(nx, ny)) continue;
        const std::int64_t bound = (i % 2 == 0) ? b.axis : b.diagonal;
        if (sq_dist(nx, ny) > bound) maximal = false;
      }
      if (maximal) centers.set(x, y);
    }
  }
  return centers;
}

SkeletonGeometry medial_axis(const BinaryMask& shape, Exec exec) {
  if (!shape.any()) throw PreconditionError("medial_axis: empty shape");
  const Grid<std::int64_t> sq = squared_distance_transform(shape, exec);
  const BinaryMask anchors = maximal_disk_centers(shape, sq);

  std::vector<std::size_t> order;
  order.reserve(shape.count());
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (shape[i]) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sq[a] < sq[b]; });

  BinaryMask cur = shape;
  // Distance-ordered homotopic thinning: peel simple non-anchor pixels from the outside in.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i : order) {
      if (!cur[i] || anchors[i]) continue;
      const Pixel p = cur.pixel_at(i);
      if (is_simple_point(cur, p.x, p.y)) {
        cur[i] = 0;
        changed = true;
      }
    }
  }
  // Anchor ridges can be two pixels thick; thin them while keeping endpoints.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i : order) {
      if (!cur[i]) continue;
      const Pixel p = cur.pixel_at(i);
      if (neighbor_count(cur, p.x, p.y) >= 2 && is_simple_point(cur, p.x, p.y)) {
        cur[i] = 0;
        changed = true;
      }
    }
  }

  SkeletonGeometry geom{shape, cur, ScalarMap(shape.width(), shape.height())};
  for (std::size_t i = 0; i < cur.size(); ++i)
    if (cur[i]) geom.radius[i] = std::sqrt(static_cast<double>(sq[i]));
  return geom;
}

SkeletonGeometry restrict_geometry(const SkeletonGeometry& geom, const BinaryMask& kept) {
  if (!kept.subset_of(geom.skeleton))
    throw PreconditionError("restrict_geometry: kept pixels outside the skeleton");
  SkeletonGeometry out{geom.shape, kept, geom.radius};
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (!kept[i]) out.radius[i] = 0.0;
  return out;
}

BinaryMask reconstruct_shape(const SkeletonGeometry& geom, const BinaryMask& kept) {
  require_same_shape(geom.skeleton, kept, "reconstruct_shape");
  if (!kept.subset_of(geom.skeleton))
    throw PreconditionError("reconstruct_shape: kept contains non-skeleton pixels");
  BinaryMask out(kept.width(), kept.height());
  for (int y = 0; y < kept.height(); ++y)
    for (int x = 0; x < kept.width(); ++x)
      if (kept.test(x, y)) for_each_disk_pixel(geom, {x, y}, [&](Pixel q) { out.set(q); });
  return out;
}

// ---------------------------------------------------------------------------
// Branch graph

std::vector<Pixel> Branch::own_pixels(const BinaryMask& junction_mask) const {
  std::vector<Pixel> own;
  for (const Pixel& p : path)
    if (!junction_mask.test(p)) own.push_back(p);
  return own;
}

std::size_t SkeletonGraph::total_length() const {
  std::size_t total = junctions.size();
  for (const Branch& b : branches) total += static_cast<std::size_t>(b.length);
  return total;
}

SkeletonGraph extract_branches(const BinaryMask& skeleton) {
  const int w = skeleton.width();
  const int h = skeleton.height();
  SkeletonGraph g;
  g.junction_mask = BinaryMask(w, h);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (skeleton.test(x, y) && neighbor_count(skeleton, x, y) >= 3) g.junction_mask.set(x, y);

  // Junction clusters (8-connected groups of junction pixels).
  Grid<int> cluster(w, h, -1);
  auto label_clusters = [&]() {
    g.junction_clusters.clear();
    std::fill(cluster.values().begin(), cluster.values().end(), -1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!g.junction_mask.test(x, y) || cluster(x, y) >= 0) continue;
        const int id = static_cast<int>(g.junction_clusters.size());
        g.junction_clusters.emplace_back();
        std::vector<Pixel> stack{{x, y}};
        cluster(x, y) = id;
        while (!stack.empty()) {
          const Pixel p = stack.back();
          stack.pop_back();
          g.junction_clusters[id].push_back(p);
          for (int i = 0; i < 8; ++i) {
            const int nx = p.x + kRingDx[i];
            const int ny = p.y + kRingDy[i];
            if (!g.junction_mask.test_clipped(nx, ny) || cluster(nx, ny) >= 0) continue;
            cluster(nx, ny) = id;
            stack.push_back({nx, ny});
          }
        }
      }
    }
  };
  label_clusters();

  // A pixel whose every neighbour belongs to one cluster is part of that cluster.
  bool absorbed = false;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!skeleton.test(x, y) || g.junction_mask.test(x, y)) continue;
      int id = -1;
      int n = 0;
      bool single = true;
      for (int i = 0; i < 8; ++i) {
        const int nx = x + kRingDx[i];
        const int ny = y + kRingDy[i];
        if (!skeleton.test_clipped(nx, ny)) continue;
        ++n;
        const int c = cluster(nx, ny);
        if (c < 0 || (id >= 0 && c != id)) single = false;
        id = c;
      }
      if (n >= 2 && single) {
        g.junction_mask.set(x, y);
        absorbed = true;
      }
    }
  }
  if (absorbed) label_clusters();

  for (const auto& c : g.junction_clusters)
    for (const Pixel& p : c) g.junctions.push_back(p);
  std::sort(g.junctions.begin(), g.junctions.end(),
            [&](Pixel a, Pixel b) { return skeleton.index(a.x, a.y) < skeleton.index(b.x, b.y); });

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (skeleton.test(x, y) && !g.junction_mask.test(x, y) && neighbor_count(skeleton, x, y) <= 1)
        g.endpoints.push_back({x, y});

  BinaryMask visited(w, h);
  auto is_free = [&](int x, int y) {
    return skeleton.test_clipped(x, y) && !g.junction_mask.test(x, y) && !visited.test(x, y);
  };

  // Walks from `start` (a non-junction pixel) away from `from` until a junction or dead end.
  auto trace = [&](Branch& b, Pixel start) {
    Pixel cur = start;
    while (true) {
      visited.set(cur);
      b.path.push_back(cur);
      ++b.length;
      Pixel next{-1, -1};
      Pixel junction{-1, -1};
      for (int i = 0; i < 8; ++i) {
        const int nx = cur.x + kRingDx[i];
        const int ny = cur.y + kRingDy[i];
        if (!skeleton.test_clipped(nx, ny)) continue;
        if (g.junction_mask.test(nx, ny)) {
          const bool is_origin = b.ends[0] >= 0 && b.path.size() == 2 &&
                                 b.path.front() == Pixel{nx, ny};
          if (!is_origin && junction.x < 0) junction = {nx, ny};
        } else if (!visited.test(nx, ny) && next.x < 0) {
          next = {nx, ny};
        }
      }
      if (next.x >= 0) {
        cur = next;
        continue;
      }
      if (junction.x >= 0) {
        b.path.push_back(junction);
        b.ends[1] = cluster(junction.x, junction.y);
      }
      return;
    }
  };

  // Branches leaving junction clusters.
  for (std::size_t c = 0; c < g.junction_clusters.size(); ++c) {
    for (const Pixel& j : g.junction_clusters[c]) {
      for (int i = 0; i < 8; ++i) {
        const int nx = j.x + kRingDx[i];
        const int ny = j.y + kRingDy[i];
        if (!is_free(nx, ny)) continue;
        Branch b;
        b.ends[0] = static_cast<int>(c);
        b.path.push_back(j);
        trace(b, {nx, ny});
        b.terminal = b.ends[1] < 0;
        g.branches.push_back(std::move(b));
      }
    }
  }
  // Junction-free components: open paths traced from an endpoint, then cycles.
  for (const Pixel& e : g.endpoints) {
    if (visited.test(e)) continue;
    Branch b;
    trace(b, e);
    b.terminal = true;
    g.branches.push_back(std::move(b));
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!is_free(x, y)) continue;
      Branch b;
      trace(b, {x, y});
      b.closed = true;
      g.branches.push_back(std::move(b));
    }
  }
  return g;
}

BinaryMask remove_branch(const BinaryMask& skeleton, const SkeletonGraph& graph,
                         std::size_t index) {
  const Branch& b = graph.branches.at(index);
  if (!b.terminal) throw PreconditionError("remove_branch: branch is not terminal");
  BinaryMask out = skeleton;
  for (const Pixel& p : b.own_pixels(graph.junction_mask)) out.set(p, false);

  // Junction pixels that only served the removed branch are now simple; strip them.
  for (int c : b.ends) {
    if (c < 0) continue;
    const auto& members = graph.junction_clusters[static_cast<std::size_t>(c)];
    for (bool changed = true; changed;) {
      changed = false;
      for (const Pixel& p : members) {
        if (!out.test(p)) continue;
        if (is_simple_point(out, p.x, p.y)) {
          out.set(p, false);
          changed = true;
        }
      }
    }
  }
  return out;
}

}  // namespace coskel
