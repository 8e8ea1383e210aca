#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coskel/raster.hpp"

namespace coskel {

using Descriptor = std::vector<double>;

inline constexpr int kSceneSide = 128;
inline constexpr int kSceneScales = 4;
inline constexpr int kSceneOrientations = 8;
inline constexpr int kSceneGrid = 4;
inline constexpr int kSceneDescriptorSize = kSceneScales * kSceneOrientations * kSceneGrid * kSceneGrid;

/// Gabor-bank energies (4 scales x 8 orientations) of the mean-free 128x128 grayscale resize,
/// averaged over a 4x4 grid. Layout: [scale][orientation][cell row][cell column].
Descriptor scene_descriptor(const Raster& img);

double squared_distance(const Descriptor& a, const Descriptor& b);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<Descriptor> centroids;
  std::vector<double> wcss_history;  // within-cluster sum of squares after each iteration
};

/// k-means++ seeding from `seed`, then Lloyd iterations until assignments settle.
/// Empty clusters are reseeded with the point farthest from its centroid.
KMeansResult kmeans_cluster(const std::vector<Descriptor>& points, int k, std::uint64_t seed,
                            int max_iterations = 100);

/// Member nearest to the members' centroid; lowest index on ties.
std::size_t key_image(const std::vector<std::size_t>& members, const std::vector<Descriptor>& descriptors);

enum class Scenario { weakly_supervised, supervised, unsupervised };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct Cluster {
  std::vector<std::size_t> members;  // ascending
  std::size_t key = 0;
};

struct NeighborStructure {
  Scenario mode = Scenario::unsupervised;
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<Cluster> clusters;   // empty in supervised mode
  std::vector<int> cluster_of;     // -1 when the image belongs to no cluster
};

struct NeighborRequest {
  Scenario mode = Scenario::unsupervised;
  std::vector<std::string> labels;  // per image; weakly supervised only
  std::vector<bool> is_train;       // per image; supervised only
  std::optional<int> k_clusters;    // default ceil(group size / 10)
  int k_nn = 5;
  std::uint64_t seed = 0;
};

/// Weakly supervised: k-means inside each label. Supervised: k_nn nearest training images for
/// every test image, training images get no neighbors. Unsupervised: k-means over everything.
NeighborStructure build_neighbors(const std::vector<Descriptor>& descriptors, const NeighborRequest& req);

}  // namespace coskel
