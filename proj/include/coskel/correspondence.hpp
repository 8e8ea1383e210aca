#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coskel/raster.hpp"

namespace coskel {

struct FlowConfig {
  int descriptor_cell = 4;  // side of each of the 4x4 histogram cells
  int pyramid_levels = 3;
  double smoothness_weight = 0.25;
  int smoothness_truncation = 2;  // cap on |d_p - d_q|_1 per neighbor pair
  int max_displacement_per_level = 8;
  int iterations_per_level = 4;
  int working_side = 256;  // longer side of the working resolution
  std::uint64_t seed = 0;
};

/// Stable hash of every field, used to key cached flows.
std::uint64_t config_hash(const FlowConfig& cfg);

inline constexpr int kDescriptorSize = 128;

/// Row-major per-pixel descriptors, kDescriptorSize floats each.
struct DescriptorField {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  const float* at(int x, int y) const noexcept {
    return data.data() + (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                          static_cast<std::size_t>(x)) * kDescriptorSize;
  }
};

/// 4x4 cells x 8 orientation bins of gradient magnitude, L2-normalized, clipped at 0.2
/// and renormalized. Flat neighborhoods give the zero descriptor.
DescriptorField dense_descriptors(const Raster& img, const FlowConfig& cfg);

struct Displacement {
  std::int16_t dx = 0;
  std::int16_t dy = 0;
  friend bool operator==(const Displacement&, const Displacement&) = default;
};

/// Displacements on the source domain pointing into a target of the stated size.
class FlowField : public Grid<Displacement> {
 public:
  FlowField() = default;
  FlowField(int width, int height, int target_width, int target_height);

  int target_width() const noexcept { return target_width_; }
  int target_height() const noexcept { return target_height_; }
  Pixel target(int x, int y) const noexcept {
    const Displacement d = (*this)(x, y);
    return {x + d.dx, y + d.dy};
  }
  /// True when every target lies inside the target domain.
  bool valid() const noexcept;

 private:
  int target_width_ = 0;
  int target_height_ = 0;
};

/// Maps p to its proportionally scaled position in the target; all zero for equal sizes.
FlowField identity_flow(int width, int height, int target_width, int target_height);
FlowField constant_flow(int width, int height, int target_width, int target_height, Displacement d);

/// out(p) = m(p + d(p)).
ScalarMap warp_map(const FlowField& flow, const ScalarMap& m);
BinaryMask warp_mask(const FlowField& flow, const BinaryMask& m);

struct FlowStats {
  // Per pyramid level (coarsest first): energy after the level's initialization and after
  // each iteration.
  std::vector<std::vector<double>> level_energies;
};

/// Sum of descriptor L1 matching costs plus weighted truncated-L1 smoothness on 4-neighbors.
double flow_energy(const DescriptorField& src, const DescriptorField& dst, const FlowField& flow,
                   const FlowConfig& cfg);

/// Coarse-to-fine propagation and random search at the working resolution; the result lives on
/// src's native domain and points into dst's native domain.
FlowField compute_flow(const Raster& src, const Raster& dst, const FlowConfig& cfg,
                       FlowStats* stats = nullptr);

/// Same optimizer on one resolution level, starting from `init`.
FlowField refine_flow(const DescriptorField& src, const DescriptorField& dst, FlowField init,
                      const FlowConfig& cfg, int search_radius, std::uint64_t seed,
                      std::vector<double>* energies = nullptr);

/// 8-byte header (uint32 LE width, uint32 LE height), then int16 LE (dx, dy) pairs.
void write_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow(const std::filesystem::path& path, int target_width, int target_height);

struct FlowEndpoint {
  std::string stem;
  const Raster* image = nullptr;
};

class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  virtual FlowField flow(const FlowEndpoint& src, const FlowEndpoint& dst) const = 0;
};

class IdentityFlowProvider final : public FlowProvider {
 public:
  FlowField flow(const FlowEndpoint& src, const FlowEndpoint& dst) const override;
};

class DenseFlowProvider final : public FlowProvider {
 public:
  explicit DenseFlowProvider(FlowConfig cfg = {}) : cfg_(cfg) {}
  FlowField flow(const FlowEndpoint& src, const FlowEndpoint& dst) const override;

 private:
  FlowConfig cfg_;
};

/// Reads <dir>/<src>__<dst>__<hash>.flow, computing and storing it on a miss.
class CachedFlowProvider final : public FlowProvider {
 public:
  CachedFlowProvider(std::filesystem::path dir, FlowConfig cfg) : dir_(std::move(dir)), cfg_(cfg) {}
  FlowField flow(const FlowEndpoint& src, const FlowEndpoint& dst) const override;
  std::filesystem::path cache_path(const std::string& src, const std::string& dst) const;

 private:
  std::filesystem::path dir_;
  FlowConfig cfg_;
};

}  // namespace coskel
