#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "btfsyn/detail/bytes.hpp"
#include "btfsyn/error.hpp"
#include "btfsyn/image.hpp"

namespace btf {

namespace {

using Index = Eigen::Index;

constexpr int kWindowRadius = 5;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void check_same_dims(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorKind::Argument, std::string(what) + ": image dimensions differ");
  }
}

std::array<double, 2 * kWindowRadius + 1> gaussian_window() {
  std::array<double, 2 * kWindowRadius + 1> w{};
  double total = 0.0;
  for (int k = -kWindowRadius; k <= kWindowRadius; ++k) {
    w[std::size_t(k + kWindowRadius)] = std::exp(-0.5 * k * k / (kSigma * kSigma));
    total += w[std::size_t(k + kWindowRadius)];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable Gaussian over the windows that fit entirely inside the image.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& x) {
  static const auto w = gaussian_window();
  const Index span = 2 * kWindowRadius + 1;
  const Index rows = x.rows() - span + 1;
  const Index cols = x.cols() - span + 1;
  Eigen::MatrixXd horizontal = Eigen::MatrixXd::Zero(x.rows(), cols);
  for (Index k = 0; k < span; ++k) horizontal += w[std::size_t(k)] * x.middleCols(k, cols);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (Index k = 0; k < span; ++k) out += w[std::size_t(k)] * horizontal.middleRows(k, rows);
  return out;
}

Eigen::MatrixXd channel(const ImageBuffer& img, int c) {
  Eigen::MatrixXd m(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) m(y, x) = img.at(x, y)(c);
  return m;
}

double dssim_plane(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double range = std::max(a.maxCoeff(), b.maxCoeff());
  if (!(range > 0.0)) range = 1.0;
  return (1.0 - ssim(a, b, range)) / 2.0;
}

}  // namespace

ImageBuffer::ImageBuffer(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw Error(ErrorKind::Argument, "ImageBuffer: dimensions must be positive");
  rgb.assign(std::size_t(w) * std::size_t(h) * 3, 0.0f);
}

bool ImageBuffer::all_finite() const {
  return std::all_of(rgb.begin(), rgb.end(), [](float v) { return std::isfinite(v); });
}

double compute_rmse(const ImageBuffer& a, const ImageBuffer& b) {
  check_same_dims(a, b, "compute_rmse");
  if (a.rgb.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = double(a.rgb[i]) - double(b.rgb[i]);
    acc += d * d;
  }
  return std::sqrt(acc / double(a.rgb.size()));
}

double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double data_range) {
  const Index span = 2 * kWindowRadius + 1;
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::Argument, "ssim: dimensions differ");
  if (a.rows() < span || a.cols() < span) throw Error(ErrorKind::Argument, "ssim: images must be at least 11x11");
  const double c1 = (kK1 * data_range) * (kK1 * data_range);
  const double c2 = (kK2 * data_range) * (kK2 * data_range);

  const Eigen::ArrayXXd mu_a = filter_valid(a).array();
  const Eigen::ArrayXXd mu_b = filter_valid(b).array();
  const Eigen::ArrayXXd var_a = filter_valid(a.cwiseProduct(a)).array() - mu_a.square();
  const Eigen::ArrayXXd var_b = filter_valid(b.cwiseProduct(b)).array() - mu_b.square();
  const Eigen::ArrayXXd cov = filter_valid(a.cwiseProduct(b)).array() - mu_a * mu_b;

  const Eigen::ArrayXXd s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                            ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
  return s.mean();
}

Eigen::MatrixXd luma(const ImageBuffer& img) {
  Eigen::MatrixXd m(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto p = img.at(x, y);
      m(y, x) = 0.2126 * p(0) + 0.7152 * p(1) + 0.0722 * p(2);
    }
  }
  return m;
}

double compute_dssim(const ImageBuffer& a, const ImageBuffer& b, DssimChannels channels) {
  check_same_dims(a, b, "compute_dssim");
  if (channels == DssimChannels::Luma) return dssim_plane(luma(a), luma(b));
  double total = 0.0;
  for (int c = 0; c < 3; ++c) total += dssim_plane(channel(a, c), channel(b, c));
  return total / 3.0;
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path, double exposure, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::Argument, "write_png: gamma must be positive");
  std::vector<std::uint8_t> pixels(img.rgb.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = std::pow(std::max(0.0, exposure * img.rgb[i]), 1.0 / gamma);
    pixels[i] = std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.width);
  image.height = png_uint_32(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Io, "write_png: " + message);
  }
}

void write_pfm(const ImageBuffer& img, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.bytes("PF\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n");
  // PFM stores rows bottom to top.
  for (int y = img.height - 1; y >= 0; --y) {
    w.f32s({&img.rgb[std::size_t(y) * std::size_t(img.width) * 3], std::size_t(img.width) * 3});
  }
  detail::write_file(path, w.buffer());
}

ImageBuffer read_pfm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  // Header: three whitespace-separated tokens, then a single whitespace byte.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    return std::string(bytes.begin() + std::ptrdiff_t(start), bytes.begin() + std::ptrdiff_t(pos));
  };
  if (token() != "PF") throw Error(ErrorKind::Format, "read_pfm: not a colour PFM file");
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw Error(ErrorKind::Format, "read_pfm: malformed header");
  }
  if (w <= 0 || h <= 0 || scale == 0.0) throw Error(ErrorKind::Format, "read_pfm: malformed header");
  ++pos;
  const std::size_t count = std::size_t(w) * std::size_t(h) * 3;
  if (pos > bytes.size() || bytes.size() - pos != count * 4) {
    throw Error(ErrorKind::Corruption, "read_pfm: pixel payload has the wrong size");
  }
  ImageBuffer img(w, h);
  const bool little = scale < 0.0;
  for (int y = h - 1; y >= 0; --y) {
    for (std::size_t k = 0; k < std::size_t(w) * 3; ++k, pos += 4) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) {
        const std::uint32_t byte = bytes[pos + std::size_t(little ? b : 3 - b)];
        u |= byte << (8 * b);
      }
      img.rgb[std::size_t(y) * std::size_t(w) * 3 + k] = std::bit_cast<float>(u);
    }
  }
  return img;
}

}  // namespace btf
