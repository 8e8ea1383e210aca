#include "coskel/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include "coskel/eval.hpp"
#include "coskel/image_io.hpp"

namespace coskel {

namespace {

constexpr std::array<const char*, 4> kFamilies{"cross", "tripod", "ell", "bar"};
constexpr std::array<Color, 4> kObjectColors{Color{0.82, 0.18, 0.15}, Color{0.15, 0.30, 0.80},
                                             Color{0.90, 0.75, 0.10}, Color{0.60, 0.20, 0.70}};

double segment_distance_sq(double px, double py, const Segment& s) {
  const double vx = s.x1 - s.x0;
  const double vy = s.y1 - s.y0;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - s.x0) * vx + (py - s.y0) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (s.x0 + t * vx);
  const double dy = py - (s.y0 + t * vy);
  return dx * dx + dy * dy;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

BinaryMask capsule_union(int width, int height, const std::vector<Segment>& segments, double half_width) {
  BinaryMask m(width, height);
  const double r2 = half_width * half_width;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (const Segment& s : segments)
        if (segment_distance_sq(x, y, s) <= r2) {
          m.set(x, y);
          break;
        }
  return m;
}

std::vector<SyntheticImage> synthetic_collection(const SyntheticConfig& cfg) {
  if (cfg.categories < 1 || cfg.categories > static_cast<int>(kFamilies.size()))
    throw std::invalid_argument("synthetic_collection: categories must be in [1,4]");
  if (cfg.per_category < 1 || cfg.width < 32 || cfg.height < 32)
    throw std::invalid_argument("synthetic_collection: need >= 1 image per category and >= 32 px sides");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  const double side = std::min(cfg.width, cfg.height);

  std::vector<SyntheticImage> out;
  for (int c = 0; c < cfg.categories; ++c) {
    for (int k = 0; k < cfg.per_category; ++k) {
      SyntheticImage si;
      char stem[64];
      std::snprintf(stem, sizeof stem, "%s_%02d", kFamilies[static_cast<std::size_t>(c)], k);
      si.stem = stem;
      si.category = kFamilies[static_cast<std::size_t>(c)];

      const double cx = 0.5 * cfg.width + uni(-0.08, 0.08) * side;
      const double cy = 0.5 * cfg.height + uni(-0.08, 0.08) * side;
      const double theta = uni(-0.35, 0.35);
      const double arm = uni(0.28, 0.36) * side;
      const double half = uni(0.045, 0.07) * side;
      std::vector<Segment> segs;
      auto arm_at = [&](double ox, double oy, double a, double len) {
        segs.push_back({ox, oy, ox + len * std::cos(a), oy + len * std::sin(a)});
      };
      switch (c) {
        case 0:
          for (int q = 0; q < 4; ++q) arm_at(cx, cy, theta + q * std::numbers::pi / 2, arm * uni(0.8, 1.0));
          break;
        case 1:
          for (int q = 0; q < 3; ++q) arm_at(cx, cy, theta - std::numbers::pi / 2 + q * 2 * std::numbers::pi / 3, arm);
          break;
        case 2: {
          const double ox = cx - 0.4 * arm;
          const double oy = cy + 0.4 * arm;
          arm_at(ox, oy, theta, 1.4 * arm);
          arm_at(ox, oy, theta - std::numbers::pi / 2, 1.4 * arm);
          break;
        }
        default:
          arm_at(cx, cy, theta, arm);
          arm_at(cx, cy, theta + std::numbers::pi, arm);
          break;
      }
      si.segmentation = capsule_union(cfg.width, cfg.height, segs, half);

      // Background texture: two oriented sinusoids over a muted base, plus pixel noise.
      const Color base{uni(0.35, 0.55), uni(0.40, 0.60), uni(0.35, 0.50)};
      const double f1 = uni(0.15, 0.35);
      const double f2 = uni(0.05, 0.15);
      const double a1 = uni(0.0, std::numbers::pi);
      const double a2 = uni(0.0, std::numbers::pi);
      const double p1 = uni(0.0, 2 * std::numbers::pi);
      Color obj = kObjectColors[static_cast<std::size_t>(c)];
      obj = {clamp01(obj.r + uni(-0.05, 0.05)), clamp01(obj.g + uni(-0.05, 0.05)), clamp01(obj.b + uni(-0.05, 0.05))};

      BinaryMask distractor(cfg.width, cfg.height);
      if (u01(rng) < cfg.distractor_probability) {
        const BinaryMask keep_out = dilate(si.segmentation, static_cast<int>(0.08 * side));
        const double rad = 0.06 * side;
        for (int attempt = 0; attempt < 30; ++attempt) {
          const double dx = uni(rad, cfg.width - 1 - rad);
          const double dy = uni(rad, cfg.height - 1 - rad);
          const BinaryMask blob = capsule_union(cfg.width, cfg.height, {{dx, dy, dx, dy}}, rad);
          if (!mask_intersection(blob, keep_out).any()) {
            distractor = blob;
            break;
          }
        }
      }
      const Color dcol{0.95, 0.92, 0.35};

      si.image = Raster(cfg.width, cfg.height);
      std::normal_distribution<double> noise(0.0, 0.025);
      for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
          Color col;
          if (si.segmentation.test(x, y)) {
            col = obj;
          } else if (distractor.test(x, y)) {
            col = dcol;
          } else {
            const double t = 0.09 * std::sin(f1 * (x * std::cos(a1) + y * std::sin(a1)) + p1) +
                             0.06 * std::sin(f2 * (x * std::cos(a2) + y * std::sin(a2)));
            col = {base.r + t, base.g + t, base.b + 0.5 * t};
          }
          si.image(x, y) = {clamp01(col.r + noise(rng)), clamp01(col.g + noise(rng)), clamp01(col.b + noise(rng))};
        }
      }
      si.skeleton = build_skeleton_groundtruth(si.segmentation);
      out.push_back(std::move(si));
    }
  }
  return out;
}

void write_synthetic_dataset(const std::filesystem::path& root, const std::vector<SyntheticImage>& images,
                             int train_per_category) {
  namespace fs = std::filesystem;
  std::map<std::string, int> seen;
  std::vector<std::string> train;
  for (const SyntheticImage& si : images) {
    for (const char* dir : {"images", "masks", "skeletons"}) fs::create_directories(root / dir / si.category);
    save_raster(root / "images" / si.category / (si.stem + ".png"), si.image);
    save_mask(root / "masks" / si.category / (si.stem + ".png"), si.segmentation);
    save_mask(root / "skeletons" / si.category / (si.stem + ".png"), si.skeleton);
    if (seen[si.category]++ < train_per_category) train.push_back(si.stem);
  }
  if (train_per_category > 0) {
    std::ofstream os(root / "train.txt");
    if (!os) throw IoError("cannot write " + (root / "train.txt").string());
    for (const std::string& s : train) os << s << '\n';
  }
}

}  // namespace coskel
