#pragma once

#include <filesystem>
#include <string>

#include "coskel/raster.hpp"

namespace coskel {

struct SaliencyConfig {
  int color_bins_per_channel = 12;
  double spatial_weight = 0.0;  // center prior exp(-w * r^2), r normalized to the half-extent
};

/// Global color rarity: each quantized color scores the frequency-weighted sum of its
/// distances to every other quantized color. Normalized to max 1.
ScalarMap compute_saliency(const Raster& img, const SaliencyConfig& cfg);

/// 256-bin histogram bin of a value in [0,1].
int otsu_bin(double v) noexcept;
/// Bin index t maximizing between-class variance of {bin <= t} vs {bin > t}.
/// Throws DegenerateInput when all values fall into one bin.
int otsu_bin_threshold(const ScalarMap& m);
/// Pixels whose bin lies above the Otsu threshold.
BinaryMask otsu_threshold(const ScalarMap& m);

class SaliencyProvider {
 public:
  virtual ~SaliencyProvider() = default;
  virtual ScalarMap saliency(const std::string& stem, const Raster& img) const = 0;
};

class BuiltinSaliency final : public SaliencyProvider {
 public:
  explicit BuiltinSaliency(SaliencyConfig cfg = {}) : cfg_(cfg) {}
  ScalarMap saliency(const std::string& stem, const Raster& img) const override;

 private:
  SaliencyConfig cfg_;
};

/// Reads <dir>/<stem>.png (16-bit or 8-bit grayscale).
class FileSaliency final : public SaliencyProvider {
 public:
  explicit FileSaliency(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ScalarMap saliency(const std::string& stem, const Raster& img) const override;

 private:
  std::filesystem::path dir_;
};

}  // namespace coskel
