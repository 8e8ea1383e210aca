#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coskel/correspondence.hpp"
#include "coskel/coseg.hpp"
#include "coskel/coskel.hpp"
#include "coskel/medial.hpp"
#include "coskel/neighbors.hpp"
#include "coskel/priors.hpp"
#include "coskel/saliency.hpp"

namespace coskel {

struct ImageRecord {
  std::string stem;
  std::string category;
  Raster image;
  bool is_train = false;
  std::optional<BinaryMask> skeleton_annotation;
};

struct RunConfig {
  Scenario mode = Scenario::unsupervised;
  double lambda = 0.1;
  int max_iterations = 5;
  bool use_key_priors = false;
  std::optional<int> k_clusters;
  int k_nn = 5;
  double bbox_margin = 0.1;  // per-side growth of the skeleton box for supervised graph cuts
  int threads = 0;           // 0: OpenMP default
  bool keep_priors = false;  // store each iterate's priors in the trace
  bool interdependence = true;  // false: appearance models always come from the priors, never the skeleton
  std::uint64_t seed = 0;
  SkeletonEnergyConfig skeleton;
  SegmentationConfig segmentation;
  SaliencyConfig saliency;
  FlowConfig flow;
};

/// Copies of the solver configs with the shared lambda and seed applied.
SkeletonEnergyConfig effective_skeleton_config(const RunConfig& cfg);
SegmentationConfig effective_segmentation_config(const RunConfig& cfg, std::size_t image);

struct EnergyTerms {
  double prior_k = 0.0;
  double interdependence_k = 0.0;
  double smoothness_k = 0.0;
  double prior_o = 0.0;
  double interdependence_o = 0.0;
  double smoothness_o = 0.0;
};

/// lambda * (prior terms) + interdependence terms + smoothness terms.
double total_energy(const EnergyTerms& e, double lambda);

struct IterateRecord {
  int t = 0;
  EnergyTerms terms;
  double energy = 0.0;
  bool accepted = false;
  std::size_t skeleton_pixels = 0;
  std::size_t segment_pixels = 0;
  BinaryMask skeleton;
  BinaryMask segmentation;
  std::optional<PriorPair> priors;  // priors this state was scored against; kept on request
};

struct ImageTrace {
  std::vector<IterateRecord> iterates;  // every computed state, t = 0 first
  int best = 0;                         // index into iterates of the returned state
  bool fixed = false;                   // supervised training image, never iterated
  bool flagged = false;
  std::string note;
};

struct RunResult {
  std::vector<BinaryMask> skeletons;
  std::vector<BinaryMask> segmentations;
  std::vector<ImageTrace> traces;
  NeighborStructure neighbors;
  std::size_t flow_count = 0;
  std::vector<long long> key_alignment_counts;  // per cluster, key mode only
  double flow_seconds = 0.0;
  double fusion_seconds = 0.0;
  std::size_t constraint_violations = 0;
  int iterations_run = 0;
};

/// State of one image: segmentation, its medial axis, skeleton, and the models fitted from it.
struct ImageState {
  BinaryMask segmentation;
  SkeletonGeometry geometry;
  BinaryMask skeleton;
};

/// Total energy terms of a state given priors; appearance models come from the skeleton.
EnergyTerms state_energy(const Raster& img, const ImageState& s, const PriorPair& priors,
                         const SkeletonEnergyConfig& kcfg, const SegmentationConfig& ocfg);

/// Bounding box of `m` grown by `margin` of its size on every side, clipped to the image.
BinaryMask grown_box_mask(const BinaryMask& m, double margin);

/// Graph cut seeded by a skeleton: skeleton pixels pinned to foreground, pixels outside the grown
/// bounding box pinned to background.
BinaryMask skeleton_seeded_cut(const Raster& img, const BinaryMask& skeleton, double margin,
                               const SegmentationConfig& cfg);

/// Initial state of a non-annotated image: Otsu-thresholded saliency (whole image when the
/// saliency is flat) and its medial axis as the skeleton.
ImageState initial_state(const Raster& img, const ScalarMap& saliency);

/// Scene descriptors of every image grouped per the run's mode.
NeighborStructure collection_neighbors(const RunConfig& cfg, const std::vector<ImageRecord>& images);

class Pipeline {
 public:
  Pipeline(RunConfig cfg, std::shared_ptr<const FlowProvider> flows,
           std::shared_ptr<const SaliencyProvider> saliency);

  RunResult run(const std::vector<ImageRecord>& images) const;

  /// The (domain, target) flows a run needs for this neighbor structure.
  std::vector<std::pair<std::size_t, std::size_t>> required_flows(const NeighborStructure& ns) const;

  const RunConfig& config() const noexcept { return cfg_; }

 private:
  RunConfig cfg_;
  std::shared_ptr<const FlowProvider> flows_;
  std::shared_ptr<const SaliencyProvider> saliency_;
};

}  // namespace coskel
