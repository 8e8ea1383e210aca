#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "coskel/raster.hpp"

namespace coskel {

/// Gaussian mixture over RGB triples.
class GaussianMixture {
 public:
  struct Component {
    double weight = 0.0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
    // Cached from covariance.
    Eigen::Matrix3d precision = Eigen::Matrix3d::Identity();
    double log_normalizer = 0.0;
  };

  struct FitOptions {
    int components = 5;
    int max_em_iterations = 100;
    double tolerance = 1e-7;  // mean log-likelihood change that ends EM
    double covariance_ridge = 1e-5;
    std::uint64_t seed = 0;
    std::size_t max_samples = 20000;  // stride-subsampled above this count
  };

  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<Component> components, double covariance_ridge = 1e-5);

  /// k-means++ seeded k-means followed by EM. Component count drops to the number of samples
  /// (and further when clusters come out empty). Throws DegenerateInput on zero samples.
  static GaussianMixture fit(std::span<const Color> samples, const FitOptions& options);

  /// EM iterations started from this model's parameters.
  GaussianMixture refine(std::span<const Color> samples, const FitOptions& options) const;

  double log_density(const Color& c) const;
  double density(const Color& c) const;
  /// Sum over samples of -log(max(density, floor)).
  double negative_log_likelihood(std::span<const Color> samples, double floor) const;

  int component_count() const noexcept { return static_cast<int>(components_.size()); }
  const std::vector<Component>& components() const noexcept { return components_; }
  bool empty() const noexcept { return components_.empty(); }

 private:
  void finalize(double ridge);

  std::vector<Component> components_;
};

}  // namespace coskel
