#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "coskel/gmm.hpp"
#include "coskel/raster.hpp"

namespace coskel {

struct AppearanceModels {
  GaussianMixture foreground;
  GaussianMixture background;
};

struct SegmentationConfig {
  double lambda = 0.1;
  double gamma = 50.0;
  std::optional<double> beta;  // unset: 1 / (2 * mean squared 4-neighbor color difference)
  int gmm_components = 5;
  int graphcut_rounds = 3;
  PixelNeighborhood neighborhood{1};
  double epsilon = 1e-6;         // clamp for the prior average
  double density_floor = 1e-12;  // lower bound on mixture densities
  double covariance_ridge = 1e-5;
  std::uint64_t seed = 0;
};

/// Per-pixel cost of each label; index 0 = background, 1 = foreground.
struct UnaryCosts : Grid<std::array<double, 2>> {
  using Grid::Grid;
};

/// Pixels pinned to a label regardless of their costs.
struct HardLabels {
  BinaryMask force_foreground;
  BinaryMask force_background;
};

GaussianMixture::FitOptions mixture_options(const SegmentationConfig& cfg);

/// Foreground from colors at K, background from colors outside R. Falls back to pixels
/// outside K and then to the image frame when the outside of R is empty.
AppearanceModels fit_appearance_models(const Raster& img, const BinaryMask& K,
                                       const BinaryMask& R, const SegmentationConfig& cfg);

/// Initial models from the priors: foreground where the skeleton prior exceeds its Otsu
/// threshold, background where the segment prior is at or below its Otsu threshold.
/// Degenerate priors fall back to `fallback_fg` / `fallback_outside`.
AppearanceModels fit_appearance_models_from_priors(const Raster& img, const ScalarMap& coskel_prior,
                                                   const ScalarMap& coseg_prior,
                                                   const BinaryMask& fallback_fg,
                                                   const BinaryMask& fallback_outside,
                                                   const SegmentationConfig& cfg);

/// Neighborhood average of the prior clamped to [eps, 1-eps].
ScalarMap smoothed_prior(const ScalarMap& prior, const SegmentationConfig& cfg);

double prior_term_o(const BinaryMask& O, const ScalarMap& prior, const SegmentationConfig& cfg);

/// Sum over pixels of -log max(P(color | model of its label), floor).
double interdependence_term_o(const Raster& img, const BinaryMask& O,
                              const AppearanceModels& models, const SegmentationConfig& cfg);

double contrast_beta(const Raster& img);
double smoothness_term_o(const Raster& img, const BinaryMask& O, const SegmentationConfig& cfg);

/// -log density per label plus lambda times the prior cross-entropy when a prior is given.
UnaryCosts unary_costs(const Raster& img, const AppearanceModels& models, const ScalarMap* prior,
                       const SegmentationConfig& cfg);

/// Exact minimizer of the unary plus contrast-weighted Potts energy on 4-neighbors.
BinaryMask segment(const Raster& img, const UnaryCosts& unary, const SegmentationConfig& cfg,
                   const HardLabels* hard = nullptr);

/// Energy minimized by segment(); +inf when a hard label is violated.
double labeling_energy(const Raster& img, const UnaryCosts& unary, const BinaryMask& labels,
                       const SegmentationConfig& cfg, const HardLabels* hard = nullptr);

struct GrabCutResult {
  BinaryMask mask;
  AppearanceModels models;
  std::vector<double> round_energies;
};

/// graphcut_rounds cuts with mixture re-estimation between them.
GrabCutResult grabcut(const Raster& img, AppearanceModels models, const ScalarMap* prior,
                      const SegmentationConfig& cfg, const HardLabels* hard = nullptr);

}  // namespace coskel
