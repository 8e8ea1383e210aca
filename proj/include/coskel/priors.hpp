#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "coskel/correspondence.hpp"
#include "coskel/raster.hpp"

namespace coskel {

struct PriorPair {
  ScalarMap coskeleton;
  ScalarMap cosegment;
};

/// Flows keyed by (domain image, target image): flows.get(i, j) lives on i and points into j,
/// so warping j's mask with it brings the mask into i's frame.
class FlowTable {
 public:
  void put(std::size_t domain, std::size_t target, FlowField flow);
  const FlowField& get(std::size_t domain, std::size_t target) const;
  bool contains(std::size_t domain, std::size_t target) const;
  std::size_t size() const noexcept { return flows_.size(); }

 private:
  std::map<std::pair<std::size_t, std::size_t>, FlowField> flows_;
};

/// (M_i + sum over j in N_i of M_j warped into i) / (|N_i| + 1).
ScalarMap fuse_prior(std::size_t i, const std::vector<BinaryMask>& masks,
                     const std::vector<std::size_t>& neighbors, const FlowTable& flows);

ScalarMap coskeleton_prior(std::size_t i, const std::vector<BinaryMask>& skeletons,
                           const std::vector<std::size_t>& neighbors, const FlowTable& flows);
ScalarMap cosegment_prior(std::size_t i, const std::vector<BinaryMask>& segmentations,
                          const std::vector<std::size_t>& neighbors, const FlowTable& flows);

/// Priors fused at the key image from every cluster member.
PriorPair key_priors(const std::vector<std::size_t>& cluster, std::size_t key,
                     const std::vector<BinaryMask>& skeletons,
                     const std::vector<BinaryMask>& segmentations, const FlowTable& flows);

/// Warps the key prior into a member's frame; `flow` lives on the member and points into the key.
PriorPair propagate_key_prior(const PriorPair& key_prior, const FlowField& flow);

enum class AlignmentMode { pairwise, key };

/// Flow computations one cluster of size n needs: n(n-1) pairwise, 2(n-1) via the key.
long long alignment_count(AlignmentMode mode, long long cluster_size);

}  // namespace coskel
