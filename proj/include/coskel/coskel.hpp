#pragma once

#include <vector>

#include "coskel/medial.hpp"
#include "coskel/raster.hpp"

namespace coskel {

struct SkeletonEnergyConfig {
  double lambda = 0.1;
  double alpha = 10.0;
  PixelNeighborhood neighborhood{2};
  double epsilon = 1e-6;
};

/// -(1/|K|) * sum over K of log(1 + window sum of the prior); 0 for an empty K.
double prior_term_k(const BinaryMask& K, const ScalarMap& prior, const SkeletonEnergyConfig& cfg);

/// -alpha * log(max(IoU(R(K,O), O), epsilon)). K must be a subset of geom.skeleton.
double interdependence_term_k(const BinaryMask& K, const SkeletonGeometry& geom, const BinaryMask& O,
                              const SkeletonEnergyConfig& cfg);

/// Branch count times the sum of inverse branch lengths; 0 for an empty graph.
double smoothness_term_k(const SkeletonGraph& graph);

struct SkeletonEnergy {
  double prior = 0.0;
  double interdependence = 0.0;
  double smoothness = 0.0;
  double total(double lambda) const noexcept { return lambda * prior + interdependence + smoothness; }
};

/// All three terms; a null prior contributes 0.
SkeletonEnergy skeleton_energy(const BinaryMask& K, const SkeletonGeometry& geom, const BinaryMask& O,
                               const ScalarMap* prior, const SkeletonEnergyConfig& cfg);

struct PruneResult {
  BinaryMask skeleton;
  SkeletonEnergy energy;
  std::vector<double> energy_trace;  // total energy before pruning and after each removal
  std::vector<int> removed_lengths;
};

/// Greedy removal of the terminal branch giving the largest energy decrease, shorter branch
/// first on ties, until no removal lowers the energy.
PruneResult prune_skeleton(const SkeletonGeometry& geom, const BinaryMask& O, const ScalarMap* prior,
                           const SkeletonEnergyConfig& cfg);

}  // namespace coskel
