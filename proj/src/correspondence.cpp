#include "coskel/correspondence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "coskel/image_io.hpp"

namespace coskel {

namespace {

// Energies are accumulated in integer micro-units so that accepted moves decrease the total
// exactly.
constexpr double kUnit = 1e6;

std::int64_t data_cost(const DescriptorField& s, const DescriptorField& d, int x, int y, int tx,
                       int ty) {
  const float* a = s.at(x, y);
  const float* b = d.at(tx, ty);
  float sum = 0.0f;
  for (int k = 0; k < kDescriptorSize; ++k) sum += std::abs(a[k] - b[k]);
  return std::llround(static_cast<double>(sum) * kUnit);
}

struct Smoothness {
  std::int64_t weight;
  int truncation;
  std::int64_t operator()(Displacement a, Displacement b) const noexcept {
    const int diff = std::abs(a.dx - b.dx) + std::abs(a.dy - b.dy);
    return weight * std::min(diff, truncation);
  }
};

Smoothness smoothness_of(const FlowConfig& cfg) {
  if (cfg.smoothness_weight < 0.0) throw std::invalid_argument("flow: negative smoothness weight");
  if (cfg.smoothness_truncation < 0) throw std::invalid_argument("flow: negative truncation");
  return {std::llround(cfg.smoothness_weight * kUnit), cfg.smoothness_truncation};
}

std::int64_t energy_units(const DescriptorField& s, const DescriptorField& d, const FlowField& f,
                          const Smoothness& sm) {
  std::int64_t total = 0;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      const Pixel t = f.target(x, y);
      total += data_cost(s, d, x, y, t.x, t.y);
      if (x + 1 < f.width()) total += sm(f(x, y), f(x + 1, y));
      if (y + 1 < f.height()) total += sm(f(x, y), f(x, y + 1));
    }
  }
  return total;
}

FlowField upsample(const FlowField& coarse, int width, int height) {
  FlowField out(width, height, width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int cx = std::min(x / 2, coarse.width() - 1);
      const int cy = std::min(y / 2, coarse.height() - 1);
      const Displacement d = coarse(cx, cy);
      const int tx = std::clamp(x + 2 * d.dx, 0, width - 1);
      const int ty = std::clamp(y + 2 * d.dy, 0, height - 1);
      out(x, y) = {static_cast<std::int16_t>(tx - x), static_cast<std::int16_t>(ty - y)};
    }
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void put_i16(std::ostream& os, std::int16_t v) {
  const auto u = static_cast<std::uint16_t>(v);
  const char b[2] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace

std::uint64_t config_hash(const FlowConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "cell=" << cfg.descriptor_cell << ";levels=" << cfg.pyramid_levels
     << ";smooth=" << cfg.smoothness_weight << ";trunc=" << cfg.smoothness_truncation
     << ";maxdisp=" << cfg.max_displacement_per_level << ";iters=" << cfg.iterations_per_level
     << ";side=" << cfg.working_side << ";seed=" << cfg.seed;
  return fnv1a(os.str());
}

DescriptorField dense_descriptors(const Raster& img, const FlowConfig& cfg) {
  if (cfg.descriptor_cell < 1) throw std::invalid_argument("descriptor_cell must be >= 1");
  const int w = img.width();
  const int h = img.height();
  constexpr int kBins = 8;

  // Integral image per orientation channel, (w+1) x (h+1).
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<std::vector<double>> integral(kBins, std::vector<double>(stride * (h + 1), 0.0));
  std::vector<std::array<double, kBins>> channel(static_cast<std::size_t>(w) * h);
  auto lum = [&](int x, int y) {
    return img.luminance(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (lum(x + 1, y) - lum(x - 1, y));
      const double gy = 0.5 * (lum(x, y + 1) - lum(x, y - 1));
      const double mag = std::hypot(gx, gy);
      auto& c = channel[img.index(x, y)];
      c.fill(0.0);
      if (mag <= 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += 2.0 * std::numbers::pi;
      const double f = theta / (std::numbers::pi / 4.0);
      const int b0 = static_cast<int>(std::floor(f)) % kBins;
      const double frac = f - std::floor(f);
      c[static_cast<std::size_t>(b0)] += mag * (1.0 - frac);
      c[static_cast<std::size_t>((b0 + 1) % kBins)] += mag * frac;
    }
  }
  for (int b = 0; b < kBins; ++b) {
    auto& t = integral[static_cast<std::size_t>(b)];
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += channel[img.index(x, y)][static_cast<std::size_t>(b)];
        t[(y + 1) * stride + x + 1] = t[y * stride + x + 1] + row;
      }
    }
  }
  auto rect = [&](int b, int x0, int y0, int x1, int y1) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, w - 1);
    y1 = std::min(y1, h - 1);
    if (x1 < x0 || y1 < y0) return 0.0;
    const auto& t = integral[static_cast<std::size_t>(b)];
    return t[(y1 + 1) * stride + x1 + 1] - t[y0 * stride + x1 + 1] - t[(y1 + 1) * stride + x0] +
           t[y0 * stride + x0];
  };

  DescriptorField out;
  out.width = w;
  out.height = h;
  out.data.assign(static_cast<std::size_t>(w) * h * kDescriptorSize, 0.0f);
  const int c = cfg.descriptor_cell;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::array<double, kDescriptorSize> v{};
      for (int cy = 0; cy < 4; ++cy) {
        for (int cx = 0; cx < 4; ++cx) {
          const int x0 = x - 2 * c + cx * c;
          const int y0 = y - 2 * c + cy * c;
          for (int b = 0; b < kBins; ++b)
            v[static_cast<std::size_t>((cy * 4 + cx) * kBins + b)] = rect(b, x0, y0, x0 + c - 1, y0 + c - 1);
        }
      }
      double norm = 0.0;
      for (double e : v) norm += e * e;
      norm = std::sqrt(norm);
      if (norm < 1e-9) continue;
      double norm2 = 0.0;
      for (double& e : v) {
        e = std::min(e / norm, 0.2);
        norm2 += e * e;
      }
      norm2 = std::sqrt(norm2);
      float* dst = out.data.data() + img.index(x, y) * kDescriptorSize;
      for (int k = 0; k < kDescriptorSize; ++k) dst[k] = static_cast<float>(v[static_cast<std::size_t>(k)] / norm2);
    }
  }
  return out;
}

FlowField::FlowField(int width, int height, int target_width, int target_height)
    : Grid<Displacement>(width, height), target_width_(target_width), target_height_(target_height) {
  if (target_width < 1 || target_height < 1) throw std::invalid_argument("flow target must be nonempty");
}

bool FlowField::valid() const noexcept {
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      const Pixel t = target(x, y);
      if (t.x < 0 || t.y < 0 || t.x >= target_width_ || t.y >= target_height_) return false;
    }
  }
  return true;
}

FlowField identity_flow(int width, int height, int target_width, int target_height) {
  FlowField f(width, height, target_width, target_height);
  for (int y = 0; y < height; ++y) {
    const int ty = std::min(target_height - 1, static_cast<int>((y + 0.5) * target_height / height));
    for (int x = 0; x < width; ++x) {
      const int tx = std::min(target_width - 1, static_cast<int>((x + 0.5) * target_width / width));
      f(x, y) = {static_cast<std::int16_t>(tx - x), static_cast<std::int16_t>(ty - y)};
    }
  }
  return f;
}

FlowField constant_flow(int width, int height, int target_width, int target_height, Displacement d) {
  FlowField f(width, height, target_width, target_height);
  for (auto& v : f.values()) v = d;
  if (!f.valid()) throw std::invalid_argument("constant_flow: targets leave the target domain");
  return f;
}

template <typename M>
M warp_impl(const FlowField& flow, const M& m) {
  if (m.width() != flow.target_width() || m.height() != flow.target_height())
    throw DimensionMismatch("warp: map does not match the flow target");
  M out(flow.width(), flow.height());
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const Pixel t = flow.target(x, y);
      if (!m.contains(t)) throw std::out_of_range("warp: flow target outside the map");
      out(x, y) = m(t);
    }
  }
  return out;
}

ScalarMap warp_map(const FlowField& flow, const ScalarMap& m) { return warp_impl(flow, m); }
BinaryMask warp_mask(const FlowField& flow, const BinaryMask& m) { return warp_impl(flow, m); }

double flow_energy(const DescriptorField& src, const DescriptorField& dst, const FlowField& flow,
                   const FlowConfig& cfg) {
  if (src.width != flow.width() || src.height != flow.height() || dst.width != flow.target_width() ||
      dst.height != flow.target_height())
    throw DimensionMismatch("flow_energy: descriptor fields do not match the flow");
  return static_cast<double>(energy_units(src, dst, flow, smoothness_of(cfg))) / kUnit;
}

FlowField refine_flow(const DescriptorField& src, const DescriptorField& dst, FlowField f,
                      const FlowConfig& cfg, int search_radius, std::uint64_t seed,
                      std::vector<double>* energies) {
  if (src.width != f.width() || src.height != f.height() || dst.width != f.target_width() ||
      dst.height != f.target_height())
    throw DimensionMismatch("refine_flow: descriptor fields do not match the flow");
  const Smoothness sm = smoothness_of(cfg);
  const int w = f.width();
  const int h = f.height();
  const int tw = dst.width;
  const int th = dst.height;
  std::mt19937_64 rng(seed);

  std::vector<std::int64_t> cur(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Pixel t = f.target(x, y);
      cur[f.index(x, y)] = data_cost(src, dst, x, y, t.x, t.y);
    }
  auto pair_cost = [&](int x, int y, Displacement d) {
    std::int64_t s = 0;
    if (x > 0) s += sm(d, f(x - 1, y));
    if (x + 1 < w) s += sm(d, f(x + 1, y));
    if (y > 0) s += sm(d, f(x, y - 1));
    if (y + 1 < h) s += sm(d, f(x, y + 1));
    return s;
  };
  // Replaces d(x,y) by `cand` only on a strict drop of the pixel's local energy.
  auto try_candidate = [&](int x, int y, Displacement cand, std::int64_t& local) {
    const int tx = x + cand.dx;
    const int ty = y + cand.dy;
    if (tx < 0 || ty < 0 || tx >= tw || ty >= th) return;
    if (cand == f(x, y)) return;
    const std::int64_t dc = data_cost(src, dst, x, y, tx, ty);
    const std::int64_t e = dc + pair_cost(x, y, cand);
    if (e < local) {
      local = e;
      f(x, y) = cand;
      cur[f.index(x, y)] = dc;
    }
  };

  if (energies) energies->push_back(static_cast<double>(energy_units(src, dst, f, sm)) / kUnit);
  for (int iter = 0; iter < cfg.iterations_per_level; ++iter) {
    const bool forward = iter % 2 == 0;
    const int step = forward ? 1 : -1;
    for (int yi = 0; yi < h; ++yi) {
      const int y = forward ? yi : h - 1 - yi;
      for (int xi = 0; xi < w; ++xi) {
        const int x = forward ? xi : w - 1 - xi;
        std::int64_t local = cur[f.index(x, y)] + pair_cost(x, y, f(x, y));
        const int px = x - step;
        const int py = y - step;
        if (px >= 0 && px < w) try_candidate(x, y, f(px, y), local);
        if (py >= 0 && py < h) try_candidate(x, y, f(x, py), local);
        for (int r = search_radius; r >= 1; r /= 2) {
          std::uniform_int_distribution<int> off(-r, r);
          const Displacement base = f(x, y);
          const Displacement cand{static_cast<std::int16_t>(base.dx + off(rng)),
                                  static_cast<std::int16_t>(base.dy + off(rng))};
          try_candidate(x, y, cand, local);
        }
      }
    }
    if (energies) energies->push_back(static_cast<double>(energy_units(src, dst, f, sm)) / kUnit);
  }
  return f;
}

FlowField compute_flow(const Raster& src, const Raster& dst, const FlowConfig& cfg, FlowStats* stats) {
  src.validate();
  dst.validate();
  if (cfg.pyramid_levels < 1) throw std::invalid_argument("pyramid_levels must be >= 1");
  if (cfg.iterations_per_level < 0) throw std::invalid_argument("iterations_per_level must be >= 0");
  const Size2 ws = fit_longer_side(src.width(), src.height(), cfg.working_side);
  const Raster s0 = resize(src, ws.width, ws.height);
  const Raster d0 = resize(dst, ws.width, ws.height);

  std::vector<Size2> dims{ws};
  while (static_cast<int>(dims.size()) < cfg.pyramid_levels) {
    const Size2 prev = dims.back();
    const Size2 next{(prev.width + 1) / 2, (prev.height + 1) / 2};
    if (std::min(next.width, next.height) < 8) break;
    dims.push_back(next);
  }

  FlowField f;
  for (int l = static_cast<int>(dims.size()) - 1; l >= 0; --l) {
    const Size2 d = dims[static_cast<std::size_t>(l)];
    const DescriptorField ds = dense_descriptors(resize(s0, d.width, d.height), cfg);
    const DescriptorField dd = dense_descriptors(resize(d0, d.width, d.height), cfg);
    if (f.empty())
      f = FlowField(d.width, d.height, d.width, d.height);
    else
      f = upsample(f, d.width, d.height);
    std::vector<double> energies;
    f = refine_flow(ds, dd, std::move(f), cfg, cfg.max_displacement_per_level,
                    cfg.seed * 1000003ull + static_cast<std::uint64_t>(l), stats ? &energies : nullptr);
    if (stats) stats->level_energies.push_back(std::move(energies));
  }

  FlowField out(src.width(), src.height(), dst.width(), dst.height());
  for (int y = 0; y < src.height(); ++y) {
    const int wy = std::min(ws.height - 1, static_cast<int>((y + 0.5) * ws.height / src.height()));
    for (int x = 0; x < src.width(); ++x) {
      const int wx = std::min(ws.width - 1, static_cast<int>((x + 0.5) * ws.width / src.width()));
      const Pixel t = f.target(wx, wy);
      const int tx = std::min(dst.width() - 1, static_cast<int>((t.x + 0.5) * dst.width() / ws.width));
      const int ty = std::min(dst.height() - 1, static_cast<int>((t.y + 0.5) * dst.height() / ws.height));
      out(x, y) = {static_cast<std::int16_t>(tx - x), static_cast<std::int16_t>(ty - y)};
    }
  }
  return out;
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write flow: " + path.string());
  put_u32(os, static_cast<std::uint32_t>(flow.width()));
  put_u32(os, static_cast<std::uint32_t>(flow.height()));
  for (const Displacement& d : flow.values()) {
    put_i16(os, d.dx);
    put_i16(os, d.dy);
  }
  if (!os) throw IoError("cannot write flow: " + path.string());
}

FlowField read_flow(const std::filesystem::path& path, int target_width, int target_height) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read flow: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw IoError("truncated flow header: " + path.string());
  auto u32 = [&](std::size_t o) {
    return static_cast<std::uint32_t>(bytes[o]) | (static_cast<std::uint32_t>(bytes[o + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[o + 2]) << 16) | (static_cast<std::uint32_t>(bytes[o + 3]) << 24);
  };
  const std::uint32_t w = u32(0);
  const std::uint32_t h = u32(4);
  if (w == 0 || h == 0 || w > 65535 || h > 65535 || bytes.size() != 8 + 4ull * w * h)
    throw IoError("malformed flow file: " + path.string());
  FlowField f(static_cast<int>(w), static_cast<int>(h), target_width, target_height);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::size_t o = 8 + 4 * i;
    f[i] = {static_cast<std::int16_t>(bytes[o] | (bytes[o + 1] << 8)),
            static_cast<std::int16_t>(bytes[o + 2] | (bytes[o + 3] << 8))};
  }
  if (!f.valid()) throw IoError("flow targets leave the target image: " + path.string());
  return f;
}

FlowField IdentityFlowProvider::flow(const FlowEndpoint& src, const FlowEndpoint& dst) const {
  return identity_flow(src.image->width(), src.image->height(), dst.image->width(), dst.image->height());
}

FlowField DenseFlowProvider::flow(const FlowEndpoint& src, const FlowEndpoint& dst) const {
  return compute_flow(*src.image, *dst.image, cfg_);
}

std::filesystem::path CachedFlowProvider::cache_path(const std::string& src, const std::string& dst) const {
  std::ostringstream name;
  name << src << "__" << dst << "__" << std::hex << config_hash(cfg_) << ".flow";
  return dir_ / name.str();
}

FlowField CachedFlowProvider::flow(const FlowEndpoint& src, const FlowEndpoint& dst) const {
  const std::filesystem::path path = cache_path(src.stem, dst.stem);
  if (std::filesystem::exists(path)) {
    FlowField f = read_flow(path, dst.image->width(), dst.image->height());
    if (f.width() == src.image->width() && f.height() == src.image->height()) return f;
  }
  FlowField f = compute_flow(*src.image, *dst.image, cfg_);
  std::ostringstream tmp;
  tmp << path.string() << ".tmp" << std::hash<std::thread::id>{}(std::this_thread::get_id());
  write_flow(tmp.str(), f);
  std::filesystem::rename(tmp.str(), path);
  return f;
}

}  // namespace coskel
