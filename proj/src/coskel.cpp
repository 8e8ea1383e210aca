#include "coskel/coskel.hpp"

#include <cmath>
#include <limits>

namespace coskel {

namespace {

void check_config(const SkeletonEnergyConfig& cfg) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("skeleton energy: lambda must be >= 0");
  if (cfg.alpha <= 0.0) throw std::invalid_argument("skeleton energy: alpha must be > 0");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw std::invalid_argument("skeleton energy: epsilon must be in (0,1)");
}

// log(1 + window sum) per pixel, or empty when there is no prior.
ScalarMap log_support(const ScalarMap* prior, const SkeletonEnergyConfig& cfg) {
  if (!prior) return {};
  ScalarMap s = box_sum(*prior, cfg.neighborhood);
  for (double& v : s.values()) v = std::log1p(v);
  return s;
}

double prior_from_support(const BinaryMask& K, const ScalarMap& support) {
  if (support.empty()) return 0.0;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < K.size(); ++i) {
    if (!K[i]) continue;
    sum += support[i];
    ++n;
  }
  return n == 0 ? 0.0 : -sum / static_cast<double>(n);
}

double interdependence_from_iou(double iou, const SkeletonEnergyConfig& cfg) {
  return -cfg.alpha * std::log(std::max(iou, cfg.epsilon));
}

double iou_from_counts(std::size_t inter, std::size_t uni) {
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double prior_term_k(const BinaryMask& K, const ScalarMap& prior, const SkeletonEnergyConfig& cfg) {
  require_same_shape(K, prior, "prior_term_k");
  return prior_from_support(K, log_support(&prior, cfg));
}

double interdependence_term_k(const BinaryMask& K, const SkeletonGeometry& geom, const BinaryMask& O,
                              const SkeletonEnergyConfig& cfg) {
  check_config(cfg);
  require_same_shape(K, O, "interdependence_term_k");
  return interdependence_from_iou(mask_iou(reconstruct_shape(geom, K), O), cfg);
}

double smoothness_term_k(const SkeletonGraph& graph) {
  if (graph.branches.empty()) return 0.0;
  double inv = 0.0;
  for (const Branch& b : graph.branches) {
    if (b.length <= 0) throw std::invalid_argument("smoothness_term_k: zero-length branch");
    inv += 1.0 / b.length;
  }
  return static_cast<double>(graph.branches.size()) * inv;
}

SkeletonEnergy skeleton_energy(const BinaryMask& K, const SkeletonGeometry& geom, const BinaryMask& O,
                               const ScalarMap* prior, const SkeletonEnergyConfig& cfg) {
  SkeletonEnergy e;
  if (prior) e.prior = prior_term_k(K, *prior, cfg);
  e.interdependence = interdependence_term_k(K, geom, O, cfg);
  e.smoothness = smoothness_term_k(extract_branches(K));
  return e;
}

PruneResult prune_skeleton(const SkeletonGeometry& geom, const BinaryMask& O, const ScalarMap* prior,
                           const SkeletonEnergyConfig& cfg) {
  check_config(cfg);
  require_same_shape(geom.shape, O, "prune_skeleton");
  if (prior) require_same_shape(*prior, O, "prune_skeleton prior");
  const ScalarMap support = log_support(prior, cfg);

  // Coverage counts of the current reconstruction.
  Grid<int> cover(O.width(), O.height(), 0);
  for (const Pixel& p : geom.skeleton.pixels())
    for_each_disk_pixel(geom, p, [&](Pixel q) { ++cover(q); });
  const std::size_t o_count = O.count();
  std::size_t inter = 0;
  std::size_t outside = 0;  // reconstruction pixels outside O
  for (std::size_t i = 0; i < cover.size(); ++i) {
    if (cover[i] == 0) continue;
    if (O[i]) ++inter; else ++outside;
  }

  PruneResult res;
  res.skeleton = geom.skeleton;
  SkeletonGraph graph = extract_branches(res.skeleton);
  auto total_of = [&](const BinaryMask& K, const SkeletonGraph& g, std::size_t in, std::size_t out,
                      SkeletonEnergy* parts) {
    SkeletonEnergy e;
    e.prior = prior_from_support(K, support);
    e.interdependence = interdependence_from_iou(iou_from_counts(in, o_count + out), cfg);
    e.smoothness = smoothness_term_k(g);
    if (parts) *parts = e;
    return e.total(cfg.lambda);
  };
  double current = total_of(res.skeleton, graph, inter, outside, &res.energy);
  res.energy_trace.push_back(current);

  while (true) {
    struct Candidate {
      double energy = std::numeric_limits<double>::infinity();
      int length = 0;
      BinaryMask mask;
      SkeletonGraph graph;
      std::size_t inter = 0;
      std::size_t outside = 0;
      std::vector<Pixel> removed;
      SkeletonEnergy parts;
    };
    Candidate best;
    bool found = false;
    for (std::size_t b = 0; b < graph.branches.size(); ++b) {
      if (!graph.branches[b].terminal) continue;
      Candidate c;
      c.mask = remove_branch(res.skeleton, graph, b);
      c.length = graph.branches[b].length;
      for (std::size_t i = 0; i < c.mask.size(); ++i)
        if (res.skeleton[i] && !c.mask[i]) c.removed.push_back(res.skeleton.pixel_at(i));
      if (c.removed.empty()) continue;
      c.inter = inter;
      c.outside = outside;
      for (const Pixel& p : c.removed)
        for_each_disk_pixel(geom, p, [&](Pixel q) {
          if (--cover(q) == 0) {
            if (O.test(q)) --c.inter; else --c.outside;
          }
        });
      for (const Pixel& p : c.removed) for_each_disk_pixel(geom, p, [&](Pixel q) { ++cover(q); });
      c.graph = extract_branches(c.mask);
      c.energy = total_of(c.mask, c.graph, c.inter, c.outside, &c.parts);
      if (!(c.energy < current)) continue;
      if (!found || c.energy < best.energy || (c.energy == best.energy && c.length < best.length)) {
        best = std::move(c);
        found = true;
      }
    }
    if (!found) break;
    for (const Pixel& p : best.removed) for_each_disk_pixel(geom, p, [&](Pixel q) { --cover(q); });
    res.skeleton = std::move(best.mask);
    graph = std::move(best.graph);
    inter = best.inter;
    outside = best.outside;
    current = best.energy;
    res.energy = best.parts;
    res.energy_trace.push_back(current);
    res.removed_lengths.push_back(best.length);
  }
  return res;
}

}  // namespace coskel
