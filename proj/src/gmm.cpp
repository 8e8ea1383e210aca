#include "coskel/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace coskel {

namespace {

Eigen::Vector3d to_vec(const Color& c) { return {c.r, c.g, c.b}; }

std::vector<Eigen::Vector3d> subsample(std::span<const Color> samples, std::size_t cap) {
  std::vector<Eigen::Vector3d> out;
  const std::size_t stride = samples.size() > cap ? (samples.size() + cap - 1) / cap : 1;
  out.reserve(samples.size() / stride + 1);
  for (std::size_t i = 0; i < samples.size(); i += stride) out.push_back(to_vec(samples[i]));
  return out;
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// k-means++ seeding then Lloyd iterations; returns the per-sample assignment.
std::vector<int> kmeans_assign(const std::vector<Eigen::Vector3d>& x, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Vector3d> centers;
  centers.push_back(x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]);
  std::vector<double> d2(x.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      d2[i] = std::min(d2[i], (x[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    if (total <= 0.0) break;  // fewer distinct colors than components
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = x.size() - 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      r -= d2[i];
      if (r < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(x[pick]);
  }

  std::vector<int> assign(x.size(), -1);
  for (int iter = 0; iter < 30; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      int best = 0;
      double best_d = (x[i] - centers[0]).squaredNorm();
      for (int c = 1; c < static_cast<int>(centers.size()); ++c) {
        const double d = (x[i] - centers[static_cast<std::size_t>(c)]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Eigen::Vector3d> sum(centers.size(), Eigen::Vector3d::Zero());
    std::vector<std::size_t> count(centers.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[static_cast<std::size_t>(assign[i])] += x[i];
      ++count[static_cast<std::size_t>(assign[i])];
    }
    for (std::size_t c = 0; c < centers.size(); ++c)
      if (count[c] > 0) centers[c] = sum[c] / static_cast<double>(count[c]);
  }
  return assign;
}

// One M-step from responsibilities (rows = samples).
std::vector<GaussianMixture::Component> m_step(const std::vector<Eigen::Vector3d>& x,
                                               const std::vector<std::vector<double>>& resp,
                                               int k) {
  std::vector<GaussianMixture::Component> comps;
  const double n = static_cast<double>(x.size());
  for (int c = 0; c < k; ++c) {
    double nk = 0.0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
      nk += resp[i][static_cast<std::size_t>(c)];
      mean += resp[i][static_cast<std::size_t>(c)] * x[i];
    }
    if (nk <= 1e-10) continue;
    mean /= nk;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Eigen::Vector3d d = x[i] - mean;
      cov += resp[i][static_cast<std::size_t>(c)] * d * d.transpose();
    }
    cov /= nk;
    GaussianMixture::Component comp;
    comp.weight = nk / n;
    comp.mean = mean;
    comp.covariance = cov;
    comps.push_back(comp);
  }
  return comps;
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<Component> components, double covariance_ridge)
    : components_(std::move(components)) {
  finalize(covariance_ridge);
}

void GaussianMixture::finalize(double ridge) {
  double total = 0.0;
  for (auto& c : components_) total += c.weight;
  for (auto& c : components_) {
    c.weight /= total;
    c.covariance += ridge * Eigen::Matrix3d::Identity();
    Eigen::LLT<Eigen::Matrix3d> llt(c.covariance);
    c.precision = llt.solve(Eigen::Matrix3d::Identity());
    const Eigen::Matrix3d l = llt.matrixL();
    const double log_det = 2.0 * (std::log(l(0, 0)) + std::log(l(1, 1)) + std::log(l(2, 2)));
    c.log_normalizer = -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + log_det);
  }
}

double GaussianMixture::log_density(const Color& color) const {
  if (components_.empty()) return -std::numeric_limits<double>::infinity();
  const Eigen::Vector3d x = to_vec(color);
  std::array<double, 16> terms{};
  std::vector<double> spill;
  const std::size_t k = components_.size();
  double* t = terms.data();
  if (k > terms.size()) {
    spill.resize(k);
    t = spill.data();
  }
  for (std::size_t c = 0; c < k; ++c) {
    const Component& comp = components_[c];
    const Eigen::Vector3d d = x - comp.mean;
    t[c] = std::log(comp.weight) + comp.log_normalizer - 0.5 * d.dot(comp.precision * d);
  }
  return log_sum_exp(std::span<const double>(t, k));
}

double GaussianMixture::density(const Color& c) const { return std::exp(log_density(c)); }

double GaussianMixture::negative_log_likelihood(std::span<const Color> samples,
                                                double floor) const {
  const double log_floor = std::log(floor);
  double total = 0.0;
  for (const Color& c : samples) total -= std::max(log_density(c), log_floor);
  return total;
}

GaussianMixture GaussianMixture::fit(std::span<const Color> samples, const FitOptions& options) {
  if (samples.empty()) throw DegenerateInput("GaussianMixture::fit: no samples");
  const std::vector<Eigen::Vector3d> x = subsample(samples, options.max_samples);
  const int k = std::max(1, std::min<int>(options.components, static_cast<int>(x.size())));
  const std::vector<int> assign = kmeans_assign(x, k, options.seed);

  std::vector<std::vector<double>> resp(x.size(), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) resp[i][static_cast<std::size_t>(assign[i])] = 1.0;
  GaussianMixture init(m_step(x, resp, k), options.covariance_ridge);
  return init.refine(samples, options);
}

GaussianMixture GaussianMixture::refine(std::span<const Color> samples,
                                        const FitOptions& options) const {
  if (samples.empty()) throw DegenerateInput("GaussianMixture::refine: no samples");
  const std::vector<Eigen::Vector3d> x = subsample(samples, options.max_samples);
  GaussianMixture model = *this;
  double previous = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> resp(x.size());
  for (int iter = 0; iter < options.max_em_iterations; ++iter) {
    const int k = model.component_count();
    double loglik = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      resp[i].assign(static_cast<std::size_t>(k), 0.0);
      for (int c = 0; c < k; ++c) {
        const Component& comp = model.components_[static_cast<std::size_t>(c)];
        const Eigen::Vector3d d = x[i] - comp.mean;
        resp[i][static_cast<std::size_t>(c)] =
            std::log(comp.weight) + comp.log_normalizer - 0.5 * d.dot(comp.precision * d);
      }
      const double lse = log_sum_exp(resp[i]);
      loglik += lse;
      for (double& r : resp[i]) r = std::exp(r - lse);
    }
    loglik /= static_cast<double>(x.size());
    if (iter > 0 && std::abs(loglik - previous) < options.tolerance) break;
    previous = loglik;
    auto comps = m_step(x, resp, k);
    model = GaussianMixture(std::move(comps), options.covariance_ridge);
  }
  return model;
}

}  // namespace coskel
