#include "coskel/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coskel {

void Raster::validate() const {
  if (width() < 1 || height() < 1) throw std::invalid_argument("raster must be at least 1x1");
  for (const Color& c : values()) {
    for (double v : {c.r, c.g, c.b}) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("raster channel outside [0,1]");
    }
  }
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(values().begin(), values().end(), [](std::uint8_t v) { return v != 0; }));
}

bool BinaryMask::any() const noexcept {
  return std::any_of(values().begin(), values().end(), [](std::uint8_t v) { return v != 0; });
}

std::vector<Pixel> BinaryMask::pixels() const {
  std::vector<Pixel> out;
  for (int y = 0; y < height(); ++y)
    for (int x = 0; x < width(); ++x)
      if (test(x, y)) out.push_back({x, y});
  return out;
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  require_same_shape(*this, other, "subset_of");
  for (std::size_t i = 0; i < size(); ++i)
    if ((*this)[i] && !other[i]) return false;
  return true;
}

namespace {

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, const char* what, Op op) {
  require_same_shape(a, b, what);
  BinaryMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i] != 0, b[i] != 0) ? 1 : 0;
  return out;
}

}  // namespace

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "mask_union", [](bool x, bool y) { return x || y; });
}
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "mask_intersection", [](bool x, bool y) { return x && y; });
}
BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "mask_difference", [](bool x, bool y) { return x && !y; });
}
BinaryMask mask_complement(const BinaryMask& a) {
  BinaryMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ? 0 : 1;
  return out;
}

ScalarMap ScalarMap::from_mask(const BinaryMask& m) {
  ScalarMap out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.0 : 0.0;
  return out;
}

double ScalarMap::min_value() const {
  if (empty()) return 0.0;
  return *std::min_element(values().begin(), values().end());
}

double ScalarMap::max_value() const {
  if (empty()) return 0.0;
  return *std::max_element(values().begin(), values().end());
}

bool ScalarMap::all_finite() const {
  return std::all_of(values().begin(), values().end(), [](double v) { return std::isfinite(v); });
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask_iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double neighborhood_sum(const ScalarMap& m, Pixel p, PixelNeighborhood n) {
  if (!m.contains(p)) throw std::out_of_range("neighborhood_sum: pixel outside map");
  const int x0 = std::max(0, p.x - n.radius);
  const int x1 = std::min(m.width() - 1, p.x + n.radius);
  const int y0 = std::max(0, p.y - n.radius);
  const int y1 = std::min(m.height() - 1, p.y + n.radius);
  double sum = 0.0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) sum += m(x, y);
  return sum;
}

IntegralImage::IntegralImage(const ScalarMap& m)
    : width_(m.width()),
      height_(m.height()),
      table_(static_cast<std::size_t>(m.width() + 1) * static_cast<std::size_t>(m.height() + 1),
             0.0) {
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  for (int y = 0; y < height_; ++y) {
    double row = 0.0;
    for (int x = 0; x < width_; ++x) {
      row += m(x, y);
      table_[(y + 1) * stride + (x + 1)] = table_[y * stride + (x + 1)] + row;
    }
  }
}

double IntegralImage::rect(int x0, int y0, int x1, int y1) const noexcept {
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  return table_[(y1 + 1) * stride + (x1 + 1)] - table_[y0 * stride + (x1 + 1)] -
         table_[(y1 + 1) * stride + x0] + table_[y0 * stride + x0];
}

double IntegralImage::window_sum(Pixel p, PixelNeighborhood n) const noexcept {
  const int x0 = std::max(0, p.x - n.radius);
  const int x1 = std::min(width_ - 1, p.x + n.radius);
  const int y0 = std::max(0, p.y - n.radius);
  const int y1 = std::min(height_ - 1, p.y + n.radius);
  return rect(x0, y0, x1, y1);
}

int IntegralImage::window_count(Pixel p, PixelNeighborhood n) const noexcept {
  const int x0 = std::max(0, p.x - n.radius);
  const int x1 = std::min(width_ - 1, p.x + n.radius);
  const int y0 = std::max(0, p.y - n.radius);
  const int y1 = std::min(height_ - 1, p.y + n.radius);
  return (x1 - x0 + 1) * (y1 - y0 + 1);
}

ScalarMap box_sum(const ScalarMap& m, PixelNeighborhood n, Exec exec) {
  const IntegralImage integral(m);
  ScalarMap out(m.width(), m.height());
  const int h = m.height();
  const int w = m.width();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = integral.window_sum({x, y}, n);
  return out;
}

ScalarMap box_mean(const ScalarMap& m, PixelNeighborhood n, Exec exec) {
  const IntegralImage integral(m);
  ScalarMap out(m.width(), m.height());
  const int h = m.height();
  const int w = m.width();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = integral.window_sum({x, y}, n) / integral.window_count({x, y}, n);
  return out;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.test(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          if (out.contains(x + dx, y + dy)) out.set(x + dx, y + dy);
    }
  }
  return out;
}

namespace {

// Labels 8-connected components; returns the label grid (-1 background) and component sizes.
std::vector<std::size_t> label_components(const BinaryMask& m, std::vector<int>& labels) {
  labels.assign(m.size(), -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < m.size(); ++start) {
    if (!m[start] || labels[start] >= 0) continue;
    const int label = static_cast<int>(sizes.size());
    sizes.push_back(0);
    labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++sizes.back();
      const Pixel p = m.pixel_at(cur);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = p.x + dx;
          const int ny = p.y + dy;
          if (!m.test_clipped(nx, ny)) continue;
          const std::size_t ni = m.index(nx, ny);
          if (labels[ni] >= 0) continue;
          labels[ni] = label;
          stack.push_back(ni);
        }
      }
    }
  }
  return sizes;
}

}  // namespace

int count_components(const BinaryMask& m) {
  std::vector<int> labels;
  return static_cast<int>(label_components(m, labels).size());
}

BinaryMask largest_component(const BinaryMask& m) {
  std::vector<int> labels;
  const auto sizes = label_components(m, labels);
  BinaryMask out(m.width(), m.height());
  if (sizes.empty()) return out;
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = labels[i] == best ? 1 : 0;
  return out;
}

BoundingBox bounding_box(const BinaryMask& m) {
  BoundingBox box{m.width(), m.height(), -1, -1};
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.test(x, y)) continue;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x);
      box.y1 = std::max(box.y1, y);
    }
  }
  if (box.x1 < 0) return BoundingBox{};
  return box;
}

}  // namespace coskel
