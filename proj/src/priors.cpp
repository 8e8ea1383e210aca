#include "coskel/priors.hpp"

#include <algorithm>
#include <string>

namespace coskel {

void FlowTable::put(std::size_t domain, std::size_t target, FlowField flow) {
  flows_[{domain, target}] = std::move(flow);
}

const FlowField& FlowTable::get(std::size_t domain, std::size_t target) const {
  const auto it = flows_.find({domain, target});
  if (it == flows_.end())
    throw PreconditionError("missing flow " + std::to_string(domain) + " -> " + std::to_string(target));
  return it->second;
}

bool FlowTable::contains(std::size_t domain, std::size_t target) const {
  return flows_.count({domain, target}) > 0;
}

ScalarMap fuse_prior(std::size_t i, const std::vector<BinaryMask>& masks,
                     const std::vector<std::size_t>& neighbors, const FlowTable& flows) {
  const BinaryMask& own = masks.at(i);
  ScalarMap sum = ScalarMap::from_mask(own);
  for (std::size_t j : neighbors) {
    if (j == i) throw PreconditionError("an image cannot be its own neighbor");
    const BinaryMask warped = warp_mask(flows.get(i, j), masks.at(j));
    require_same_shape(warped, own, "warped neighbor mask");
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += warped[p];
  }
  const double count = static_cast<double>(neighbors.size() + 1);
  for (double& v : sum.values()) v /= count;
  return sum;
}

ScalarMap coskeleton_prior(std::size_t i, const std::vector<BinaryMask>& skeletons,
                           const std::vector<std::size_t>& neighbors, const FlowTable& flows) {
  return fuse_prior(i, skeletons, neighbors, flows);
}

ScalarMap cosegment_prior(std::size_t i, const std::vector<BinaryMask>& segmentations,
                          const std::vector<std::size_t>& neighbors, const FlowTable& flows) {
  return fuse_prior(i, segmentations, neighbors, flows);
}

PriorPair key_priors(const std::vector<std::size_t>& cluster, std::size_t key,
                     const std::vector<BinaryMask>& skeletons,
                     const std::vector<BinaryMask>& segmentations, const FlowTable& flows) {
  if (std::find(cluster.begin(), cluster.end(), key) == cluster.end())
    throw PreconditionError("key image is not a cluster member");
  std::vector<std::size_t> others;
  for (std::size_t m : cluster)
    if (m != key) others.push_back(m);
  return {fuse_prior(key, skeletons, others, flows), fuse_prior(key, segmentations, others, flows)};
}

PriorPair propagate_key_prior(const PriorPair& key_prior, const FlowField& flow) {
  return {warp_map(flow, key_prior.coskeleton), warp_map(flow, key_prior.cosegment)};
}

long long alignment_count(AlignmentMode mode, long long n) {
  if (n < 1) throw std::invalid_argument("alignment_count: cluster size must be >= 1");
  return mode == AlignmentMode::pairwise ? n * (n - 1) : 2 * (n - 1);
}

}  // namespace coskel
