#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coskel/config.hpp"
#include "coskel/pipeline.hpp"

namespace coskel {

/// Output file locations of one image relative to the run's output root.
struct ImageOutputs {
  std::filesystem::path segmentation;
  std::filesystem::path skeleton;
  std::filesystem::path overlay;
  std::vector<std::filesystem::path> priors;  // one coskeleton/cosegment pair per iterate when dumped
};

/// Standard output layout: segmentations/, skeletons/, overlays/ and priors/ under the root.
ImageOutputs output_paths(const std::string& stem, std::size_t iterates, bool with_priors);

/// Run manifest as JSON text: every config entry, seed, hash, neighbor structure, per-image
/// per-iterate energy terms and output paths. Timings are excluded so reruns are byte-identical.
std::string manifest_json(const RunSettings& settings, const std::vector<ImageRecord>& images, const RunResult& result,
                          bool with_priors);

}  // namespace coskel
