#pragma once

#include <filesystem>
#include <stdexcept>

#include "coskel/raster.hpp"

namespace coskel {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decodes PNG/JPEG (any bit depth) into a [0,1] color raster.
Raster load_raster(const std::filesystem::path& path);
/// Writes an 8-bit RGB PNG.
void save_raster(const std::filesystem::path& path, const Raster& img);

/// Masks are 8-bit single channel, 0 = off and 255 = on. Any nonzero value loads as on.
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const BinaryMask& m);

/// Scalar maps in [0,1] are stored as 16-bit single channel (value * 65535, clamped).
ScalarMap load_scalar_map(const std::filesystem::path& path);
void save_scalar_map(const std::filesystem::path& path, const ScalarMap& m);

/// Area-averaging resize (bilinear when enlarging).
Raster resize(const Raster& img, int width, int height);

/// Dimensions scaled so the longer side equals `longer_side`; never enlarges.
struct Size2 {
  int width = 0;
  int height = 0;
};
Size2 fit_longer_side(int width, int height, int longer_side);

}  // namespace coskel
