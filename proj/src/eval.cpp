#include "coskel/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "coskel/image_io.hpp"
#include "coskel/medial.hpp"

namespace coskel {

namespace {

// Fraction of `from` pixels within d of a `to` pixel.
double matched_fraction(const BinaryMask& from, const Grid<std::int64_t>& to_dist, double d) {
  const double d2 = d * d;
  std::size_t total = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (!from[i]) continue;
    ++total;
    if (static_cast<double>(to_dist[i]) <= d2) ++hit;
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::string format_value(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

double f_measure_at_d(const BinaryMask& pred, const BinaryMask& gt, double d) {
  require_same_shape(pred, gt, "f_measure_at_d");
  if (d < 0.0) throw std::invalid_argument("f_measure_at_d: negative tolerance");
  const bool pe = !pred.any();
  const bool ge = !gt.any();
  if (pe && ge) return 1.0;
  if (pe || ge) return 0.0;
  const double p = matched_fraction(pred, squared_distance_to_sites(gt), d);
  const double r = matched_fraction(gt, squared_distance_to_sites(pred), d);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

int alpha_tolerance(int width, int height) {
  return static_cast<int>(std::lround(0.0075 * std::sqrt(static_cast<double>(width) * width +
                                                         static_cast<double>(height) * height)));
}

double f_alpha(const BinaryMask& pred, const BinaryMask& gt, int width, int height) {
  return f_measure_at_d(pred, gt, alpha_tolerance(width, height));
}

double jaccard(const BinaryMask& pred, const BinaryMask& gt) { return mask_iou(pred, gt); }

BinaryMask build_skeleton_groundtruth(const BinaryMask& gt_mask, const SkeletonEnergyConfig& cfg) {
  if (!gt_mask.any()) throw PreconditionError("build_skeleton_groundtruth: empty mask");
  SkeletonEnergyConfig c = cfg;
  c.lambda = 0.0;
  const SkeletonGeometry geom = medial_axis(gt_mask);
  return prune_skeleton(geom, gt_mask, nullptr, c).skeleton;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::test:
      return "test";
    case Split::all:
      return "all";
  }
  return "all";
}

IngestResult ingest_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());
  IngestResult out;
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) return out;

  std::set<std::string> train;
  bool has_split = false;
  if (std::ifstream split(root / "train.txt"); split) {
    has_split = true;
    for (std::string line; std::getline(split, line);) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (!line.empty()) train.insert(line);
    }
  }

  std::vector<std::pair<std::string, fs::path>> found;  // (category, image path)
  for (const auto& e : fs::directory_iterator(images)) {
    if (e.is_directory()) {
      for (const auto& f : fs::directory_iterator(e.path()))
        if (f.is_regular_file() && is_image_file(f.path())) found.emplace_back(e.path().filename().string(), f.path());
    } else if (e.is_regular_file() && is_image_file(e.path())) {
      found.emplace_back("", e.path());
    }
  }
  std::sort(found.begin(), found.end());

  for (const auto& [category, path] : found) {
    DatasetEntry entry;
    entry.image_path = path;
    entry.stem = path.stem().string();
    entry.category = category;
    if (has_split) entry.split = train.count(entry.stem) ? Split::train : Split::test;
    try {
      const Raster img = load_raster(path);
      auto twin = [&](const char* dir) {
        fs::path p = root / dir;
        if (!category.empty()) p /= category;
        return p / (entry.stem + ".png");
      };
      for (auto [dir, slot] : {std::pair{"masks", &entry.gt_segmentation}, std::pair{"skeletons", &entry.gt_skeleton}}) {
        const fs::path p = twin(dir);
        if (!fs::exists(p)) continue;
        BinaryMask m = load_mask(p);
        if (!m.same_shape(img))
          throw DimensionMismatch(std::string(dir) + " " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                                  " vs image " + std::to_string(img.width()) + "x" + std::to_string(img.height()));
        *slot = std::move(m);
      }
      out.entries.push_back(std::move(entry));
    } catch (const std::exception& e) {
      out.rejected.push_back(path.string() + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, IndexedFile> index_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::map<std::string, IndexedFile> out;
  if (!fs::is_directory(dir)) return out;
  auto add = [&](const fs::path& p, const std::string& cat) {
    const std::string stem = p.stem().string();
    const auto [it, fresh] = out.try_emplace(stem, IndexedFile{cat, p});
    if (!fresh) throw IoError("duplicate stem '" + stem + "': " + it->second.path.string() + " and " + p.string());
  };
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) {
      for (const auto& f : fs::directory_iterator(e.path()))
        if (f.is_regular_file() && is_image_file(f.path())) add(f.path(), e.path().filename().string());
    } else if (e.is_regular_file() && is_image_file(e.path())) {
      add(e.path(), "");
    }
  }
  return out;
}

MetricRow evaluate_image(const std::string& stem, const std::string& category, const BinaryMask& pred_skeleton,
                         const BinaryMask& gt_skeleton, const BinaryMask* pred_segmentation,
                         const BinaryMask* gt_segmentation) {
  MetricRow row;
  row.stem = stem;
  row.category = category;
  for (int d = 0; d < 6; ++d) row.f[static_cast<std::size_t>(d)] = f_measure_at_d(pred_skeleton, gt_skeleton, d);
  row.f_alpha = f_alpha(pred_skeleton, gt_skeleton, gt_skeleton.width(), gt_skeleton.height());
  if (pred_segmentation && gt_segmentation) row.jaccard = jaccard(*pred_segmentation, *gt_segmentation);
  return row;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  constexpr std::size_t kCols = 8;  // F0..F5, Falpha, J
  auto values = [](const MetricRow& r) {
    std::array<std::optional<double>, kCols> v;
    for (std::size_t d = 0; d < 6; ++d) v[d] = r.f[d];
    v[6] = r.f_alpha;
    v[7] = r.jaccard;
    return v;
  };
  auto emit = [&](const std::string& stem, const std::string& cat, const std::array<std::optional<double>, kCols>& v) {
    os << stem << ',' << cat;
    for (const auto& x : v) os << ',' << (x ? format_value(*x) : "");
    os << '\n';
  };

  os << "stem,category,F0,F1,F2,F3,F4,F5,Falpha,J\n";
  for (const MetricRow& r : rows) emit(r.stem, r.category, values(r));
  if (rows.empty()) return;

  struct Acc {
    std::array<double, kCols> sum{};
    std::array<std::size_t, kCols> n{};
  };
  auto mean_of = [](const Acc& a) {
    std::array<std::optional<double>, kCols> v;
    for (std::size_t k = 0; k < kCols; ++k)
      if (a.n[k]) v[k] = a.sum[k] / static_cast<double>(a.n[k]);
    return v;
  };
  std::map<std::string, Acc> per_cat;
  Acc all;
  for (const MetricRow& r : rows) {
    const auto v = values(r);
    for (std::size_t k = 0; k < kCols; ++k) {
      if (!v[k]) continue;
      per_cat[r.category].sum[k] += *v[k];
      ++per_cat[r.category].n[k];
      all.sum[k] += *v[k];
      ++all.n[k];
    }
    per_cat.try_emplace(r.category);
  }
  for (const auto& [cat, a] : per_cat) emit("mean", cat, mean_of(a));
  emit("mean", "all", mean_of(all));

  // Population variance of the per-category means.
  std::array<std::optional<double>, kCols> var;
  for (std::size_t k = 0; k < kCols; ++k) {
    double m = 0.0, m2 = 0.0, c = 0.0;
    for (const auto& [cat, a] : per_cat) {
      const auto mean = mean_of(a)[k];
      if (!mean) continue;
      m += *mean;
      m2 += *mean * *mean;
      c += 1.0;
    }
    if (c > 0.0) var[k] = std::max(0.0, m2 / c - (m / c) * (m / c));
  }
  emit("variance", "all", var);
}

}  // namespace coskel
