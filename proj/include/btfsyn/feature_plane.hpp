#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "btfsyn/error.hpp"

namespace btf {

using Index = Eigen::Index;

enum class AddressMode : std::uint8_t { Wrap = 0, Clamp = 1 };

/// Four bilinear taps. Texel indices are already resolved through the
/// addressing modes; weights sum to 1.
template <typename Scalar>
struct BilinearTaps {
  std::array<Index, 4> texel;
  std::array<Scalar, 4> weight;
};

template <typename Scalar>
struct TexelGradient {
  Index texel;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad;
};

/// A 2D grid of C-channel feature vectors, stored channels x (width*height)
/// so that one texel is one contiguous column. Texel (row, col) lives in
/// column row*width + col.
template <typename Scalar>
class FeaturePlane {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  FeaturePlane() = default;
  FeaturePlane(Index width, Index height, Index channels, AddressMode wrap_u,
               AddressMode wrap_v)
      : width_(width), height_(height), wrap_u_(wrap_u), wrap_v_(wrap_v),
        data_(Matrix::Zero(channels, width * height)) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw Error(ErrorKind::Argument, "FeaturePlane: dimensions must be positive");
    }
  }

  Index width() const { return width_; }
  Index height() const { return height_; }
  Index channels() const { return data_.rows(); }
  Index texel_count() const { return data_.cols(); }
  AddressMode wrap_u() const { return wrap_u_; }
  AddressMode wrap_v() const { return wrap_v_; }

  Matrix& data() { return data_; }
  const Matrix& data() const { return data_; }

  auto texel(Index row, Index col) { return data_.col(row * width_ + col); }
  auto texel(Index row, Index col) const { return data_.col(row * width_ + col); }

  bool all_finite() const { return data_.allFinite(); }

  /// Texel centers sit at ((i + 0.5) / W, (j + 0.5) / H).
  template <typename Coord>
  BilinearTaps<Scalar> taps(const Eigen::MatrixBase<Coord>& uv) const {
    const Scalar x = Scalar(uv(0)) * Scalar(width_) - Scalar(0.5);
    const Scalar y = Scalar(uv(1)) * Scalar(height_) - Scalar(0.5);
    using std::floor;
    const Scalar fx = floor(x);
    const Scalar fy = floor(y);
    const Scalar tx = x - fx;
    const Scalar ty = y - fy;
    const auto x0 = static_cast<Index>(fx);
    const auto y0 = static_cast<Index>(fy);
    const Index c0 = resolve(x0, width_, wrap_u_);
    const Index c1 = resolve(x0 + 1, width_, wrap_u_);
    const Index r0 = resolve(y0, height_, wrap_v_);
    const Index r1 = resolve(y0 + 1, height_, wrap_v_);
    return {{r0 * width_ + c0, r0 * width_ + c1, r1 * width_ + c0, r1 * width_ + c1},
            {(Scalar(1) - tx) * (Scalar(1) - ty), tx * (Scalar(1) - ty),
             (Scalar(1) - tx) * ty, tx * ty}};
  }

  template <typename Coord>
  Vector fetch(const Eigen::MatrixBase<Coord>& uv) const {
    Vector out(channels());
    fetch_into(uv, out);
    return out;
  }

  template <typename Coord, typename Out>
  void fetch_into(const Eigen::MatrixBase<Coord>& uv, Eigen::MatrixBase<Out> const& out) const {
    const auto t = taps(uv);
    auto& o = const_cast<Eigen::MatrixBase<Out>&>(out);
    o = t.weight[0] * data_.col(t.texel[0]) + t.weight[1] * data_.col(t.texel[1]) +
        t.weight[2] * data_.col(t.texel[2]) + t.weight[3] * data_.col(t.texel[3]);
  }

  /// Scatter grad_out into a gradient buffer shaped like data().
  template <typename Grad>
  static void scatter(const BilinearTaps<Scalar>& t, const Eigen::MatrixBase<Grad>& grad_out,
                      Matrix& grad_plane) {
    for (int k = 0; k < 4; ++k) {
      if (t.weight[k] != Scalar(0)) grad_plane.col(t.texel[k]) += t.weight[k] * grad_out;
    }
  }

  static Index resolve(Index i, Index n, AddressMode mode) {
    if (mode == AddressMode::Wrap) {
      const Index r = i % n;
      return r < 0 ? r + n : r;
    }
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
  }

 private:
  Index width_ = 0;
  Index height_ = 0;
  AddressMode wrap_u_ = AddressMode::Wrap;
  AddressMode wrap_v_ = AddressMode::Wrap;
  Matrix data_;
};

template <typename Scalar, typename Coord>
typename FeaturePlane<Scalar>::Vector plane_fetch(const FeaturePlane<Scalar>& plane,
                                                  const Eigen::MatrixBase<Coord>& uv) {
  return plane.fetch(uv);
}

/// Gradient of plane_fetch with respect to the texels it reads. Taps with
/// zero weight are dropped and taps that alias the same texel (clamped
/// edges, one-texel wrap axes) are merged, so at most four entries remain.
template <typename Scalar, typename Coord, typename Grad>
std::vector<TexelGradient<Scalar>> plane_fetch_backward(const FeaturePlane<Scalar>& plane,
                                                        const Eigen::MatrixBase<Coord>& uv,
                                                        const Eigen::MatrixBase<Grad>& grad_out) {
  std::vector<TexelGradient<Scalar>> out;
  if (grad_out.isZero(0)) return out;
  const auto t = plane.taps(uv);
  for (int k = 0; k < 4; ++k) {
    if (t.weight[k] == Scalar(0)) continue;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const TexelGradient<Scalar>& g) { return g.texel == t.texel[k]; });
    if (it == out.end()) {
      out.push_back({t.texel[k], t.weight[k] * grad_out});
    } else {
      it->grad += t.weight[k] * grad_out;
    }
  }
  return out;
}

/// Zero-mean uniform init with He fan-in scaling. A plane is treated as one
/// (1, C, H, W) tensor, so fan_in = C * H * W.
template <typename Scalar>
void he_uniform_init(FeaturePlane<Scalar>& plane, Scalar leaky_slope, std::mt19937_64& rng) {
  const double fan_in = double(plane.channels()) * double(plane.texel_count());
  const double gain = std::sqrt(2.0 / (1.0 + double(leaky_slope) * double(leaky_slope)));
  const double bound = gain * std::sqrt(3.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < plane.data().size(); ++i) plane.data().data()[i] = Scalar(dist(rng));
}

}  // namespace btf
