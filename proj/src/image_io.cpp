#include "coskel/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace coskel {

namespace {

cv::Mat read_any(const std::filesystem::path& path, int flags) {
  cv::Mat m = cv::imread(path.string(), flags);
  if (m.empty()) throw IoError("cannot decode image: " + path.string());
  return m;
}

void write_png(const std::filesystem::path& path, const cv::Mat& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Fixed compression level keeps outputs byte-identical across runs.
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(path.string(), m, params)) throw IoError("cannot write image: " + path.string());
}

double depth_scale(int depth) {
  switch (depth) {
    case CV_8U:
      return 1.0 / 255.0;
    case CV_16U:
      return 1.0 / 65535.0;
    default:
      throw IoError("unsupported image depth");
  }
}

cv::Mat to_mat(const Raster& img) {
  cv::Mat m(img.height(), img.width(), CV_64FC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = m.ptr<cv::Vec3d>(y);
    for (int x = 0; x < img.width(); ++x) {
      const Color& c = img(x, y);
      row[x] = cv::Vec3d(c.b, c.g, c.r);
    }
  }
  return m;
}

Raster from_mat(const cv::Mat& m) {
  Raster img(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3d>(y);
    for (int x = 0; x < m.cols; ++x) {
      img(x, y) = Color{std::clamp(row[x][2], 0.0, 1.0), std::clamp(row[x][1], 0.0, 1.0),
                        std::clamp(row[x][0], 0.0, 1.0)};
    }
  }
  return img;
}

}  // namespace

Raster load_raster(const std::filesystem::path& path) {
  cv::Mat m = read_any(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_COLOR);
  const double scale = depth_scale(m.depth());
  cv::Mat f;
  m.convertTo(f, CV_64FC3, scale);
  return from_mat(f);
}

void save_raster(const std::filesystem::path& path, const Raster& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      const Color& c = img(x, y);
      auto q = [](double v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      };
      row[x] = cv::Vec3b(q(c.b), q(c.g), q(c.r));
    }
  }
  write_png(path, m);
}

BinaryMask load_mask(const std::filesystem::path& path) {
  cv::Mat m = read_any(path, cv::IMREAD_GRAYSCALE | cv::IMREAD_ANYDEPTH);
  BinaryMask out(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      const bool on = m.depth() == CV_16U ? m.at<std::uint16_t>(y, x) != 0
                                          : m.at<std::uint8_t>(y, x) != 0;
      out.set(x, y, on);
    }
  }
  return out;
}

void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  cv::Mat m(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) m.at<std::uint8_t>(y, x) = mask.test(x, y) ? 255 : 0;
  write_png(path, m);
}

ScalarMap load_scalar_map(const std::filesystem::path& path) {
  cv::Mat m = read_any(path, cv::IMREAD_GRAYSCALE | cv::IMREAD_ANYDEPTH);
  const double scale = depth_scale(m.depth());
  ScalarMap out(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      const double raw = m.depth() == CV_16U ? m.at<std::uint16_t>(y, x) : m.at<std::uint8_t>(y, x);
      out(x, y) = raw * scale;
    }
  }
  return out;
}

void save_scalar_map(const std::filesystem::path& path, const ScalarMap& map) {
  cv::Mat m(map.height(), map.width(), CV_16UC1);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const double v = std::clamp(map(x, y), 0.0, 1.0);
      m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
  }
  write_png(path, m);
}

Raster resize(const Raster& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  cv::Mat out;
  const bool shrinking = width <= img.width() && height <= img.height();
  cv::resize(to_mat(img), out, cv::Size(width, height), 0, 0,
             shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  return from_mat(out);
}

Size2 fit_longer_side(int width, int height, int longer_side) {
  const int longer = std::max(width, height);
  if (longer <= longer_side) return {width, height};
  const double s = static_cast<double>(longer_side) / longer;
  return {std::max(1, static_cast<int>(std::lround(width * s))),
          std::max(1, static_cast<int>(std::lround(height * s)))};
}

}  // namespace coskel
