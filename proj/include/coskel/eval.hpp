#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coskel/coskel.hpp"
#include "coskel/raster.hpp"

namespace coskel {

/// F-measure where a pixel counts as matched when some pixel of the other mask lies within
/// Euclidean distance d. Two empty masks score 1; P + R = 0 scores 0.
double f_measure_at_d(const BinaryMask& pred, const BinaryMask& gt, double d);

/// round(0.0075 * sqrt(width^2 + height^2)).
int alpha_tolerance(int width, int height);
double f_alpha(const BinaryMask& pred, const BinaryMask& gt, int width, int height);
double jaccard(const BinaryMask& pred, const BinaryMask& gt);

/// Medial axis of the mask pruned without any cross-image prior.
BinaryMask build_skeleton_groundtruth(const BinaryMask& gt_mask, const SkeletonEnergyConfig& cfg = {});

enum class Split { train, test, all };
std::string to_string(Split s);

struct DatasetEntry {
  std::filesystem::path image_path;
  std::string stem;
  std::string category;
  std::optional<BinaryMask> gt_segmentation;
  std::optional<BinaryMask> gt_skeleton;
  Split split = Split::all;
};

struct IngestResult {
  std::vector<DatasetEntry> entries;
  std::vector<std::string> rejected;  // one line per skipped entry
};

/// Walks images/<category>/<stem>.{png,jpg,jpeg} (or images/<stem>.* without categories) with
/// optional masks/ and skeletons/ twins. A train.txt of stems marks the training split.
IngestResult ingest_dataset(const std::filesystem::path& root);

struct MetricRow {
  std::string stem;
  std::string category;
  std::array<double, 6> f{};  // F at d = 0..5
  double f_alpha = 0.0;
  std::optional<double> jaccard;
};

MetricRow evaluate_image(const std::string& stem, const std::string& category, const BinaryMask& pred_skeleton,
                         const BinaryMask& gt_skeleton, const BinaryMask* pred_segmentation = nullptr,
                         const BinaryMask* gt_segmentation = nullptr);

struct IndexedFile {
  std::string category;  // name of the enclosing subdirectory, empty at top level
  std::filesystem::path path;
};

/// Stem -> image file for every PNG/JPEG directly under `dir` or one subdirectory below it.
/// Duplicate stems throw IoError; a missing directory yields an empty index.
std::map<std::string, IndexedFile> index_images(const std::filesystem::path& dir);

/// Per-image rows, then per-category means, the overall mean and the overall variance.
void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows);

}  // namespace coskel
