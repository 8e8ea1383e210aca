#include "coskel/overlay.hpp"

namespace coskel {

BinaryMask skeleton_stroke(const BinaryMask& skeleton) { return dilate(skeleton, 1); }

Raster render_overlay(const Raster& img, const BinaryMask& segmentation, const BinaryMask& skeleton) {
  require_same_shape(img, segmentation, "render_overlay segmentation");
  require_same_shape(img, skeleton, "render_overlay skeleton");
  Raster out = img;
  const BinaryMask stroke = skeleton_stroke(skeleton);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (stroke[i]) {
      out[i] = kSkeletonColor;
    } else if (segmentation[i]) {
      const Color c = out[i];
      out[i] = {c.r + kTintOpacity * (kSegmentTint.r - c.r), c.g + kTintOpacity * (kSegmentTint.g - c.g),
                c.b + kTintOpacity * (kSegmentTint.b - c.b)};
    }
  }
  return out;
}

}  // namespace coskel
