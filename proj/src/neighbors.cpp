#include "coskel/neighbors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include "coskel/image_io.hpp"

namespace coskel {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

const FftPlans& plans() {
  static FftPlans p = [] {
    std::lock_guard lock(fftw_planner_mutex());
    const std::size_t n = kSceneSide * kSceneSide;
    auto* a = fftw_alloc_complex(n);
    auto* b = fftw_alloc_complex(n);
    FftPlans out;
    out.forward = fftw_plan_dft_2d(kSceneSide, kSceneSide, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
    out.inverse = fftw_plan_dft_2d(kSceneSide, kSceneSide, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(a);
    fftw_free(b);
    return out;
  }();
  return p;
}

// Gaussian transfer functions in polar frequency coordinates; zero at DC.
const std::vector<std::vector<double>>& filter_bank() {
  static const std::vector<std::vector<double>> bank = [] {
    std::vector<std::vector<double>> out;
    const int n = kSceneSide;
    for (int s = 0; s < kSceneScales; ++s) {
      const double f0 = 0.3 / std::pow(2.0, s);
      const double sigma_f = 0.55 * f0 / 1.5;
      for (int o = 0; o < kSceneOrientations; ++o) {
        const double theta0 = o * std::numbers::pi / kSceneOrientations;
        const double sigma_t = std::numbers::pi / kSceneOrientations / 1.2;
        std::vector<double> g(static_cast<std::size_t>(n) * n, 0.0);
        for (int v = 0; v < n; ++v) {
          const double fy = static_cast<double>(v < n / 2 ? v : v - n) / n;
          for (int u = 0; u < n; ++u) {
            const double fx = static_cast<double>(u < n / 2 ? u : u - n) / n;
            if (u == 0 && v == 0) continue;
            const double fr = std::hypot(fx, fy);
            double dt = std::fmod(std::atan2(fy, fx) - theta0, std::numbers::pi);
            if (dt < 0) dt += std::numbers::pi;
            dt = std::min(dt, std::numbers::pi - dt);
            g[static_cast<std::size_t>(v) * n + u] =
                std::exp(-0.5 * (fr - f0) * (fr - f0) / (sigma_f * sigma_f) - 0.5 * dt * dt / (sigma_t * sigma_t));
          }
        }
        out.push_back(std::move(g));
      }
    }
    return out;
  }();
  return bank;
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Descriptor scene_descriptor(const Raster& img) {
  img.validate();
  const Raster small = resize(img, kSceneSide, kSceneSide);
  const std::size_t n = kSceneSide * kSceneSide;
  std::vector<double> gray(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Pixel p = small.pixel_at(i);
    gray[i] = small.luminance(p.x, p.y);
    mean += gray[i];
  }
  mean /= static_cast<double>(n);
  bool flat = true;
  for (double& g : gray) {
    g -= mean;
    if (g != 0.0) flat = false;
  }
  Descriptor out(kSceneDescriptorSize, 0.0);
  if (flat) return out;

  const FftPlans& p = plans();
  auto* spatial = fftw_alloc_complex(n);
  auto* spectrum = fftw_alloc_complex(n);
  auto* filtered = fftw_alloc_complex(n);
  auto* response = fftw_alloc_complex(n);
  for (std::size_t i = 0; i < n; ++i) {
    spatial[i][0] = gray[i];
    spatial[i][1] = 0.0;
  }
  fftw_execute_dft(p.forward, spatial, spectrum);

  const auto& bank = filter_bank();
  const int cell = kSceneSide / kSceneGrid;
  for (std::size_t f = 0; f < bank.size(); ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      filtered[i][0] = spectrum[i][0] * bank[f][i];
      filtered[i][1] = spectrum[i][1] * bank[f][i];
    }
    fftw_execute_dft(p.inverse, filtered, response);
    for (int y = 0; y < kSceneSide; ++y) {
      for (int x = 0; x < kSceneSide; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * kSceneSide + x;
        const double mag = std::hypot(response[i][0], response[i][1]) / static_cast<double>(n);
        out[f * kSceneGrid * kSceneGrid + static_cast<std::size_t>((y / cell) * kSceneGrid + x / cell)] += mag;
      }
    }
  }
  for (double& v : out) v /= static_cast<double>(cell * cell);
  fftw_free(spatial);
  fftw_free(spectrum);
  fftw_free(filtered);
  fftw_free(response);
  return out;
}

double squared_distance(const Descriptor& a, const Descriptor& b) {
  if (a.size() != b.size()) throw DimensionMismatch("descriptor lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

KMeansResult kmeans_cluster(const std::vector<Descriptor>& points, int k, std::uint64_t seed,
                            int max_iterations) {
  if (k < 1) throw PreconditionError("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > points.size()) throw PreconditionError("kmeans: k exceeds point count");
  const std::size_t n = points.size();
  std::mt19937_64 rng(seed);

  KMeansResult r;
  r.centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(r.centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], r.centroids.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // All points coincide with a centroid; duplicates become empty clusters below.
      pick = r.centroids.size() % n;
    }
    r.centroids.push_back(points[pick]);
  }

  r.labels.assign(n, -1);
  auto wcss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += squared_distance(points[i], r.centroids[static_cast<std::size_t>(r.labels[i])]);
    return s;
  };
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(points[i], r.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(points[i], r.centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (r.labels[i] != best) changed = true;
      r.labels[i] = best;
    }
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (int l : r.labels) ++count[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[static_cast<std::size_t>(r.labels[i])] < 2) continue;
        const double d = squared_distance(points[i], r.centroids[static_cast<std::size_t>(r.labels[i])]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --count[static_cast<std::size_t>(r.labels[far])];
      r.labels[far] = c;
      count[static_cast<std::size_t>(c)] = 1;
      r.centroids[static_cast<std::size_t>(c)] = points[far];
      changed = true;
    }
    if (!changed && iter > 0) break;
    for (int c = 0; c < k; ++c) {
      Descriptor mean(points[0].size(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        if (r.labels[i] == c)
          for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += points[i][j];
      for (double& v : mean) v /= static_cast<double>(count[static_cast<std::size_t>(c)]);
      r.centroids[static_cast<std::size_t>(c)] = std::move(mean);
    }
    r.wcss_history.push_back(wcss());
  }
  return r;
}

std::size_t key_image(const std::vector<std::size_t>& members, const std::vector<Descriptor>& descriptors) {
  if (members.empty()) throw PreconditionError("key_image: empty cluster");
  Descriptor centroid(descriptors.at(members[0]).size(), 0.0);
  for (std::size_t m : members)
    for (std::size_t j = 0; j < centroid.size(); ++j) centroid[j] += descriptors.at(m)[j];
  for (double& v : centroid) v /= static_cast<double>(members.size());
  std::size_t best = members[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m : members) {
    const double d = squared_distance(descriptors[m], centroid);
    if (d < best_d || (d == best_d && m < best)) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::weakly_supervised:
      return "weakly_supervised";
    case Scenario::supervised:
      return "supervised";
    case Scenario::unsupervised:
      return "unsupervised";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "weakly_supervised" || s == "weakly-supervised" || s == "weak") return Scenario::weakly_supervised;
  if (s == "supervised") return Scenario::supervised;
  if (s == "unsupervised") return Scenario::unsupervised;
  throw std::invalid_argument("unknown scenario: " + s);
}

NeighborStructure build_neighbors(const std::vector<Descriptor>& descriptors, const NeighborRequest& req) {
  const std::size_t n = descriptors.size();
  NeighborStructure ns;
  ns.mode = req.mode;
  ns.neighbors.assign(n, {});
  ns.cluster_of.assign(n, -1);

  auto cluster_group = [&](const std::vector<std::size_t>& group, std::uint64_t seed) {
    if (group.empty()) return;
    const int default_k = static_cast<int>((group.size() + 9) / 10);
    const int k = std::clamp(req.k_clusters.value_or(default_k), 1, static_cast<int>(group.size()));
    std::vector<Descriptor> pts;
    for (std::size_t g : group) pts.push_back(descriptors[g]);
    const KMeansResult km = kmeans_cluster(pts, k, seed);
    const std::size_t first = ns.clusters.size();
    ns.clusters.resize(first + static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < group.size(); ++i)
      ns.clusters[first + static_cast<std::size_t>(km.labels[i])].members.push_back(group[i]);
    for (std::size_t c = first; c < ns.clusters.size(); ++c) {
      Cluster& cl = ns.clusters[c];
      cl.members = sorted_unique(cl.members);
      cl.key = key_image(cl.members, descriptors);
      for (std::size_t m : cl.members) {
        ns.cluster_of[m] = static_cast<int>(c);
        for (std::size_t o : cl.members)
          if (o != m) ns.neighbors[m].push_back(o);
      }
    }
  };

  switch (req.mode) {
    case Scenario::weakly_supervised: {
      if (req.labels.size() != n) throw PreconditionError("weakly supervised mode needs a label per image");
      std::map<std::string, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < n; ++i) groups[req.labels[i]].push_back(i);
      std::uint64_t g = 0;
      for (const auto& [label, members] : groups) cluster_group(members, req.seed + 7919 * g++);
      break;
    }
    case Scenario::unsupervised: {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      cluster_group(all, req.seed);
      break;
    }
    case Scenario::supervised: {
      if (req.is_train.size() != n) throw PreconditionError("supervised mode needs a train flag per image");
      if (req.k_nn < 1) throw PreconditionError("k_nn must be >= 1");
      std::vector<std::size_t> train;
      for (std::size_t i = 0; i < n; ++i)
        if (req.is_train[i]) train.push_back(i);
      if (train.empty()) throw PreconditionError("supervised mode needs at least one training image");
      for (std::size_t i = 0; i < n; ++i) {
        if (req.is_train[i]) continue;
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t t : train) cand.emplace_back(squared_distance(descriptors[i], descriptors[t]), t);
        std::sort(cand.begin(), cand.end());
        const std::size_t take = std::min(cand.size(), static_cast<std::size_t>(req.k_nn));
        for (std::size_t j = 0; j < take; ++j) ns.neighbors[i].push_back(cand[j].second);
      }
      break;
    }
  }
  return ns;
}

}  // namespace coskel
