#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

namespace btf {

/// Linear RGB pixels, row-major with row 0 at the top.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  ImageBuffer() = default;
  ImageBuffer(int w, int h);

  Eigen::Map<Eigen::Vector3f> at(int x, int y) { return Eigen::Map<Eigen::Vector3f>(&rgb[index(x, y)]); }
  Eigen::Map<const Eigen::Vector3f> at(int x, int y) const {
    return Eigen::Map<const Eigen::Vector3f>(&rgb[index(x, y)]);
  }
  bool all_finite() const;

 private:
  std::size_t index(int x, int y) const { return (std::size_t(y) * std::size_t(width) + std::size_t(x)) * 3; }
};

/// Throws Argument on dimension mismatch.
double compute_rmse(const ImageBuffer& a, const ImageBuffer& b);

enum class DssimChannels { Luma, PerChannel };

/// (1 - SSIM) / 2 with an 11x11 Gaussian window (sigma 1.5), k1 = 0.01,
/// k2 = 0.03, population statistics, averaged over windows that fit inside
/// the image. The dynamic range is the larger of the two images' maxima,
/// which keeps the metric symmetric. Luma uses Rec. 709 weights.
/// Throws Argument on dimension mismatch or images smaller than 11x11.
double compute_dssim(const ImageBuffer& a, const ImageBuffer& b, DssimChannels channels = DssimChannels::Luma);

/// Mean SSIM of two single-channel images (rows x cols) for a given range.
double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double data_range);

Eigen::MatrixXd luma(const ImageBuffer& img);

/// 8-bit sRGB-style PNG: clamp((exposure * v)^(1/gamma)).
void write_png(const ImageBuffer& img, const std::filesystem::path& path, double exposure = 1.0,
               double gamma = 2.2);
/// Little-endian colour PFM holding the exact linear buffer.
void write_pfm(const ImageBuffer& img, const std::filesystem::path& path);
ImageBuffer read_pfm(const std::filesystem::path& path);

}  // namespace btf
