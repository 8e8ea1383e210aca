#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coskel {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an input carries no usable signal (zero variance, empty seeds).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Exec { serial, parallel };

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Row-major pixel grid. Base storage for every per-pixel map in the project.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative grid dimensions");
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool contains(Pixel p) const noexcept { return contains(p.x, p.y); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  Pixel pixel_at(std::size_t i) const noexcept {
    return {static_cast<int>(i % static_cast<std::size_t>(width_)),
            static_cast<int>(i / static_cast<std::size_t>(width_))};
  }

  T& operator()(int x, int y) noexcept { return values_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return values_[index(x, y)]; }
  T& operator()(Pixel p) noexcept { return (*this)(p.x, p.y); }
  const T& operator()(Pixel p) const noexcept { return (*this)(p.x, p.y); }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                            "x" + std::to_string(b.height()));
  }
}

struct Color {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  friend bool operator==(const Color&, const Color&) = default;
};

inline double squared_distance(const Color& a, const Color& b) noexcept {
  const double dr = a.r - b.r;
  const double dg = a.g - b.g;
  const double db = a.b - b.b;
  return dr * dr + dg * dg + db * db;
}

/// Color image, channels in [0,1].
class Raster : public Grid<Color> {
 public:
  Raster() = default;
  Raster(int width, int height, Color fill = {}) : Grid<Color>(width, height, fill) {}

  /// Throws std::invalid_argument when the raster is empty or a channel leaves [0,1].
  void validate() const;
  double luminance(int x, int y) const noexcept {
    const Color& c = (*this)(x, y);
    return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
  }
};

/// Per-pixel {0,1} map. Skeletons, segmentations and reconstructions live here.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : Grid<std::uint8_t>(width, height, fill ? 1 : 0) {}

  bool test(int x, int y) const noexcept { return (*this)(x, y) != 0; }
  bool test(Pixel p) const noexcept { return test(p.x, p.y); }
  /// Out-of-bounds reads as unset.
  bool test_clipped(int x, int y) const noexcept { return contains(x, y) && test(x, y); }
  void set(int x, int y, bool on = true) noexcept { (*this)(x, y) = on ? 1 : 0; }
  void set(Pixel p, bool on = true) noexcept { set(p.x, p.y, on); }

  std::size_t count() const noexcept;
  bool any() const noexcept;
  std::vector<Pixel> pixels() const;
  /// True when every set pixel of `this` is set in `other`.
  bool subset_of(const BinaryMask& other) const;
};

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_complement(const BinaryMask& a);

/// Real-valued per-pixel map (saliency, priors, radii).
class ScalarMap : public Grid<double> {
 public:
  ScalarMap() = default;
  ScalarMap(int width, int height, double fill = 0.0) : Grid<double>(width, height, fill) {}

  static ScalarMap from_mask(const BinaryMask& m);
  double min_value() const;
  double max_value() const;
  bool all_finite() const;
};

/// Square window of side 2 * radius + 1.
struct PixelNeighborhood {
  int radius = 0;

  explicit PixelNeighborhood(int r = 0) : radius(r) {
    if (r < 0) throw std::invalid_argument("neighborhood radius must be >= 0");
  }
  int side() const noexcept { return 2 * radius + 1; }
};

/// |a ∩ b| / |a ∪ b|; 1 when both masks are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Sum of `m` over the window around `p`, clipped to the map bounds.
double neighborhood_sum(const ScalarMap& m, Pixel p, PixelNeighborhood n);

/// Summed-area table for constant-time clipped window sums.
class IntegralImage {
 public:
  explicit IntegralImage(const ScalarMap& m);

  double window_sum(Pixel p, PixelNeighborhood n) const noexcept;
  /// Number of in-bounds pixels in the clipped window.
  int window_count(Pixel p, PixelNeighborhood n) const noexcept;

 private:
  double rect(int x0, int y0, int x1, int y1) const noexcept;

  int width_;
  int height_;
  std::vector<double> table_;  // (width + 1) x (height + 1)
};

/// neighborhood_sum evaluated at every pixel.
ScalarMap box_sum(const ScalarMap& m, PixelNeighborhood n, Exec exec = Exec::parallel);
/// Clipped-window mean at every pixel (window sum / in-bounds window size).
ScalarMap box_mean(const ScalarMap& m, PixelNeighborhood n, Exec exec = Exec::parallel);

/// Square (Chebyshev) dilation.
BinaryMask dilate(const BinaryMask& m, int radius);

/// Number of 8-connected foreground components.
int count_components(const BinaryMask& m);

/// Keeps the 8-connected foreground component with the most pixels (lowest index on ties).
BinaryMask largest_component(const BinaryMask& m);

struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;  // inclusive
  int y1 = -1;
  bool empty() const noexcept { return x1 < x0 || y1 < y0; }
};

BoundingBox bounding_box(const BinaryMask& m);

}  // namespace coskel
