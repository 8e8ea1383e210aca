#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coskel/raster.hpp"

namespace coskel {

struct SyntheticConfig {
  int categories = 2;  // up to 4 shape families
  int per_category = 10;
  int width = 96;
  int height = 96;
  double distractor_probability = 0.5;  // small off-object blob of a rare color
  std::uint64_t seed = 1;
};

struct SyntheticImage {
  std::string stem;
  std::string category;
  Raster image;
  BinaryMask segmentation;
  BinaryMask skeleton;  // pruned medial axis of the segmentation
};

/// Colored articulated shapes (cross, tripod, L, bar families) on textured backgrounds with
/// ground truth. Deterministic in the seed.
std::vector<SyntheticImage> synthetic_collection(const SyntheticConfig& cfg);

/// Union of thick segments; endpoints given in pixels.
struct Segment {
  double x0, y0, x1, y1;
};
BinaryMask capsule_union(int width, int height, const std::vector<Segment>& segments, double half_width);

/// Writes images/, masks/ and skeletons/ in the ingestible layout, one subdirectory per category.
/// When `train_per_category` > 0 the first that many stems of each category go to train.txt.
void write_synthetic_dataset(const std::filesystem::path& root, const std::vector<SyntheticImage>& images,
                             int train_per_category = 0);

}  // namespace coskel
