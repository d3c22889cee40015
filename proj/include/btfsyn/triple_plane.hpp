#pragma once

// The triple-plane decomposition: a positional plane U, half-vector plane H
// and difference-vector plane D, decoded by a small MLP.

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <type_traits>
#include <vector>

#include "btfsyn/error.hpp"
#include "btfsyn/feature_plane.hpp"
#include "btfsyn/halfdiff.hpp"
#include "btfsyn/mlp.hpp"

namespace btf {

/// How the decoder output relates to reflectance.
enum class OutputSpace : std::uint8_t { Linear = 0, Log1p = 1 };

struct ModelShape {
  Index u_width = 400;
  Index u_height = 400;
  Index u_channels = 16;
  Index dir_width = 20;   // theta axis
  Index dir_height = 20;  // phi axis
  Index dir_channels = 8;
  std::vector<Index> hidden = {32, 32, 32};

  Index input_dim() const { return u_channels + 2 * dir_channels; }

  std::vector<Index> mlp_dims() const {
    std::vector<Index> d{input_dim()};
    d.insert(d.end(), hidden.begin(), hidden.end());
    d.push_back(3);
    return d;
  }

  /// Bytes of raw f32 plane payload.
  std::uint64_t plane_bytes() const {
    return 4ull * (std::uint64_t(u_width * u_height * u_channels) +
                   2ull * std::uint64_t(dir_width * dir_height * dir_channels));
  }
};

template <typename Scalar>
struct TriplePlaneModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  FeaturePlane<Scalar> plane_u;
  FeaturePlane<Scalar> plane_h;
  FeaturePlane<Scalar> plane_d;
  MlpParams<Scalar> mlp;
  OutputSpace output_space = OutputSpace::Linear;

  static TriplePlaneModel create(const ModelShape& shape, std::uint64_t seed,
                                 Scalar leaky_slope = Scalar(0.01)) {
    TriplePlaneModel m;
    m.plane_u = FeaturePlane<Scalar>(shape.u_width, shape.u_height, shape.u_channels,
                                     AddressMode::Wrap, AddressMode::Wrap);
    m.plane_h = FeaturePlane<Scalar>(shape.dir_width, shape.dir_height, shape.dir_channels,
                                     AddressMode::Clamp, AddressMode::Wrap);
    m.plane_d = FeaturePlane<Scalar>(shape.dir_width, shape.dir_height, shape.dir_channels,
                                     AddressMode::Clamp, AddressMode::Wrap);
    const auto dims = shape.mlp_dims();
    m.mlp = MlpParams<Scalar>::zeros(dims, leaky_slope);
    std::mt19937_64 rng(seed);
    he_uniform_init(m.plane_u, leaky_slope, rng);
    he_uniform_init(m.plane_h, leaky_slope, rng);
    he_uniform_init(m.plane_d, leaky_slope, rng);
    he_uniform_init(m.mlp, rng);
    return m;
  }

  ModelShape shape() const {
    ModelShape s;
    s.u_width = plane_u.width();
    s.u_height = plane_u.height();
    s.u_channels = plane_u.channels();
    s.dir_width = plane_h.width();
    s.dir_height = plane_h.height();
    s.dir_channels = plane_h.channels();
    const auto d = mlp.dims();
    s.hidden.assign(d.begin() + 1, d.end() - 1);
    return s;
  }

  Index input_dim() const {
    return plane_u.channels() + plane_h.channels() + plane_d.channels();
  }

  /// Throws if the plane channels do not add up to the decoder input.
  void validate() const {
    if (input_dim() != mlp.input_dim() || mlp.output_dim() != 3) {
      throw Error(ErrorKind::Format, "TriplePlaneModel: plane channels do not match decoder input");
    }
    if (plane_h.width() != plane_d.width() || plane_h.height() != plane_d.height() ||
        plane_h.channels() != plane_d.channels()) {
      throw Error(ErrorKind::Format, "TriplePlaneModel: H and D planes differ in shape");
    }
  }

  bool all_finite() const {
    return plane_u.all_finite() && plane_h.all_finite() && plane_d.all_finite() && mlp.all_finite();
  }

  /// Decoder input: [U(uv); H(uv_h); D(uv_d)].
  template <typename PosFeature>
  Vector assemble(const Eigen::MatrixBase<PosFeature>& pos, const PlaneCoords<Scalar>& dir) const {
    Vector x(input_dim());
    const Index cu = plane_u.channels();
    const Index cd = plane_h.channels();
    x.head(cu) = pos;
    plane_h.fetch_into(dir.uv_h, x.segment(cu, cd));
    plane_d.fetch_into(dir.uv_d, x.segment(cu + cd, cd));
    return x;
  }

  /// Raw decoder output for a positional feature vector.
  template <typename PosFeature>
  Vec3<Scalar> decode_feature(const Eigen::MatrixBase<PosFeature>& pos,
                              const PlaneCoords<Scalar>& dir) const {
    const Vector y = mlp_forward_single(mlp, assemble(pos, dir));
    Vec3<Scalar> out = y.template head<3>();
    if (output_space == OutputSpace::Log1p) out = out.array().exp() - Scalar(1);
    return out;
  }

  /// Reconstruction at exemplar position uv (plane U wraps).
  template <typename Coord>
  Vec3<Scalar> decode(const Eigen::MatrixBase<Coord>& uv, const PlaneCoords<Scalar>& dir) const {
    return decode_feature(plane_u.fetch(uv), dir);
  }

  template <typename NewScalar>
  TriplePlaneModel<NewScalar> cast() const {
    TriplePlaneModel<NewScalar> m;
    auto cast_plane = [](const FeaturePlane<Scalar>& p) {
      FeaturePlane<NewScalar> q(p.width(), p.height(), p.channels(), p.wrap_u(), p.wrap_v());
      q.data() = p.data().template cast<NewScalar>();
      return q;
    };
    m.plane_u = cast_plane(plane_u);
    m.plane_h = cast_plane(plane_h);
    m.plane_d = cast_plane(plane_d);
    m.mlp.leaky_slope = NewScalar(mlp.leaky_slope);
    m.mlp.output_activation = mlp.output_activation;
    for (std::size_t k = 0; k < mlp.layer_count(); ++k) {
      m.mlp.weights.push_back(mlp.weights[k].template cast<NewScalar>());
      m.mlp.biases.push_back(mlp.biases[k].template cast<NewScalar>());
    }
    m.output_space = output_space;
    return m;
  }
};

/// Structure-of-arrays training samples, one per column.
template <typename Scalar>
struct SampleBatch {
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> uv;
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> uv_h;
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> uv_d;
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> target;

  Index size() const { return uv.cols(); }

  void resize(Index n) {
    uv.resize(2, n);
    uv_h.resize(2, n);
    uv_d.resize(2, n);
    target.resize(3, n);
  }
};

template <typename Scalar>
struct ModelGradients {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix plane_u;
  Matrix plane_h;
  Matrix plane_d;
  MlpParams<Scalar> mlp;

  static ModelGradients zeros_like(const TriplePlaneModel<Scalar>& m) {
    return {Matrix::Zero(m.plane_u.channels(), m.plane_u.texel_count()),
            Matrix::Zero(m.plane_h.channels(), m.plane_h.texel_count()),
            Matrix::Zero(m.plane_d.channels(), m.plane_d.texel_count()), m.mlp.zeros_like()};
  }

  void set_zero() {
    plane_u.setZero();
    plane_h.setZero();
    plane_d.setZero();
    mlp = mlp.zeros_like();
  }

  ModelGradients& operator+=(const ModelGradients& o) {
    plane_u += o.plane_u;
    plane_h += o.plane_h;
    plane_d += o.plane_d;
    mlp += o.mlp;
    return *this;
  }
};

/// Mean absolute difference over all components, accumulated in double.
template <typename Scalar>
Scalar loss_l1(const std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>>>& pred,
               const std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>>>& target) {
  if (pred.cols() != target.cols()) throw Error(ErrorKind::Argument, "loss_l1: length mismatch");
  if (pred.cols() == 0) return Scalar(0);
  const double sum = (pred - target).cwiseAbs().template cast<double>().sum();
  return Scalar(sum / double(pred.size()));
}

/// Runs the batch forward, then accumulates grad_scale * d(sum |pred - target|)
/// into grads. Returns the summed absolute error (not the mean). The
/// subgradient of |x| at 0 is 0.
template <typename Scalar>
Scalar l1_forward_backward(const TriplePlaneModel<Scalar>& model, const SampleBatch<Scalar>& batch,
                           Scalar grad_scale, ModelGradients<Scalar>& grads) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Index n = batch.size();
  const Index cu = model.plane_u.channels();
  const Index cd = model.plane_h.channels();

  std::vector<BilinearTaps<Scalar>> tu(n), th(n), td(n);
  Matrix x(model.input_dim(), n);
  for (Index i = 0; i < n; ++i) {
    tu[i] = model.plane_u.taps(batch.uv.col(i));
    th[i] = model.plane_h.taps(batch.uv_h.col(i));
    td[i] = model.plane_d.taps(batch.uv_d.col(i));
    auto gather = [&](const FeaturePlane<Scalar>& p, const BilinearTaps<Scalar>& t, Index row, Index c) {
      x.col(i).segment(row, c) = t.weight[0] * p.data().col(t.texel[0]) +
                                 t.weight[1] * p.data().col(t.texel[1]) +
                                 t.weight[2] * p.data().col(t.texel[2]) +
                                 t.weight[3] * p.data().col(t.texel[3]);
    };
    gather(model.plane_u, tu[i], 0, cu);
    gather(model.plane_h, th[i], cu, cd);
    gather(model.plane_d, td[i], cu + cd, cd);
  }

  MlpCache<Scalar> cache;
  const Matrix y = mlp_forward(model.mlp, x, &cache);
  const Matrix diff = y - batch.target;
  const Scalar abs_sum = diff.cwiseAbs().sum();

  const Matrix grad_y = diff.unaryExpr([grad_scale](Scalar v) {
    return v > Scalar(0) ? grad_scale : (v < Scalar(0) ? -grad_scale : Scalar(0));
  });
  auto back = mlp_backward(model.mlp, cache, grad_y);
  grads.mlp += back.grad_params;
  for (Index i = 0; i < n; ++i) {
    FeaturePlane<Scalar>::scatter(tu[i], back.grad_x.col(i).segment(0, cu), grads.plane_u);
    FeaturePlane<Scalar>::scatter(th[i], back.grad_x.col(i).segment(cu, cd), grads.plane_h);
    FeaturePlane<Scalar>::scatter(td[i], back.grad_x.col(i).segment(cu + cd, cd), grads.plane_d);
  }
  return abs_sum;
}

}  // namespace btf
