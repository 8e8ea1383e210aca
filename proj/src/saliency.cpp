#include "coskel/saliency.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "coskel/image_io.hpp"

namespace coskel {

namespace {

int quantize(double v, int bins) {
  return std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
}

}  // namespace

ScalarMap compute_saliency(const Raster& img, const SaliencyConfig& cfg) {
  img.validate();
  if (cfg.color_bins_per_channel < 2) throw std::invalid_argument("saliency: need >= 2 bins");
  if (cfg.spatial_weight < 0.0) throw std::invalid_argument("saliency: negative spatial weight");
  const int b = cfg.color_bins_per_channel;
  const std::size_t nbins = static_cast<std::size_t>(b) * b * b;

  std::vector<int> bin_of(img.size());
  std::vector<double> freq(nbins, 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Color& c = img[i];
    const int bin = (quantize(c.r, b) * b + quantize(c.g, b)) * b + quantize(c.b, b);
    bin_of[i] = bin;
    freq[static_cast<std::size_t>(bin)] += 1.0;
  }
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < nbins; ++k)
    if (freq[k] > 0.0) used.push_back(k);

  auto center = [b](std::size_t k) {
    const int ib = static_cast<int>(k % static_cast<std::size_t>(b));
    const int ig = static_cast<int>((k / static_cast<std::size_t>(b)) % static_cast<std::size_t>(b));
    const int ir = static_cast<int>(k / (static_cast<std::size_t>(b) * b));
    return Color{(ir + 0.5) / b, (ig + 0.5) / b, (ib + 0.5) / b};
  };

  const double total = static_cast<double>(img.size());
  std::vector<double> score(nbins, 0.0);
  for (std::size_t a : used) {
    const Color ca = center(a);
    double s = 0.0;
    for (std::size_t o : used) s += freq[o] / total * std::sqrt(squared_distance(ca, center(o)));
    score[a] = s;
  }

  ScalarMap out(img.width(), img.height());
  const double cx = 0.5 * (img.width() - 1);
  const double cy = 0.5 * (img.height() - 1);
  const double hx = std::max(0.5 * img.width(), 1.0);
  const double hy = std::max(0.5 * img.height(), 1.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double v = score[static_cast<std::size_t>(bin_of[img.index(x, y)])];
      if (cfg.spatial_weight > 0.0) {
        const double rx = (x - cx) / hx;
        const double ry = (y - cy) / hy;
        v *= std::exp(-cfg.spatial_weight * (rx * rx + ry * ry));
      }
      out(x, y) = v;
    }
  }
  const double peak = out.max_value();
  if (peak > 0.0)
    for (double& v : out.values()) v /= peak;
  return out;
}

int otsu_bin(double v) noexcept {
  return std::clamp(static_cast<int>(std::floor(v * 256.0)), 0, 255);
}

int otsu_bin_threshold(const ScalarMap& m) {
  if (m.empty()) throw DegenerateInput("otsu: empty map");
  std::array<double, 256> hist{};
  for (double v : m.values()) hist[static_cast<std::size_t>(otsu_bin(v))] += 1.0;
  const double n = static_cast<double>(m.size());
  int occupied = 0;
  double sum_all = 0.0;
  for (int k = 0; k < 256; ++k) {
    if (hist[static_cast<std::size_t>(k)] > 0.0) ++occupied;
    sum_all += k * hist[static_cast<std::size_t>(k)];
  }
  if (occupied < 2) throw DegenerateInput("otsu: map has zero variance");

  int best_t = 0;
  double best = -1.0;
  double w0 = 0.0;
  double sum0 = 0.0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[static_cast<std::size_t>(t)];
    sum0 += t * hist[static_cast<std::size_t>(t)];
    const double w1 = n - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

BinaryMask otsu_threshold(const ScalarMap& m) {
  const int t = otsu_bin_threshold(m);
  BinaryMask out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = otsu_bin(m[i]) > t ? 1 : 0;
  return out;
}

ScalarMap BuiltinSaliency::saliency(const std::string&, const Raster& img) const {
  return compute_saliency(img, cfg_);
}

ScalarMap FileSaliency::saliency(const std::string& stem, const Raster& img) const {
  ScalarMap m = load_scalar_map(dir_ / (stem + ".png"));
  require_same_shape(m, img, "saliency map");
  return m;
}

}  // namespace coskel
