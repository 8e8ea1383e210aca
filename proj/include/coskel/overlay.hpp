#pragma once

#include "coskel/raster.hpp"

namespace coskel {

inline constexpr Color kSegmentTint{0.10, 0.75, 0.25};
inline constexpr Color kSkeletonColor{1.0, 0.0, 0.0};
inline constexpr double kTintOpacity = 0.45;

/// Pixels painted by the skeleton: the mask dilated to a 3-px wide stroke.
BinaryMask skeleton_stroke(const BinaryMask& skeleton);

/// Segmentation blended in as a translucent tint, skeleton stroke painted on top.
Raster render_overlay(const Raster& img, const BinaryMask& segmentation, const BinaryMask& skeleton);

}  // namespace coskel
