#pragma once

// Fully connected decoder with LeakyReLU hidden layers and hand-written
// reverse mode. Batched paths keep one sample per column.

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <span>
#include <type_traits>
#include <vector>

#include "btfsyn/error.hpp"

namespace btf {

using Index = Eigen::Index;

template <typename Scalar>
struct MlpParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;  // weights[k] is out_k x in_k
  std::vector<Vector> biases;
  Scalar leaky_slope = Scalar(0.01);
  bool output_activation = false;

  /// dims = {input, hidden..., output}; all parameters zero.
  static MlpParams zeros(std::span<const Index> dims, Scalar slope = Scalar(0.01)) {
    if (dims.size() < 2) throw Error(ErrorKind::Argument, "MlpParams: need at least two layer dims");
    MlpParams p;
    p.leaky_slope = slope;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
      if (dims[k] <= 0 || dims[k + 1] <= 0) throw Error(ErrorKind::Argument, "MlpParams: non-positive dim");
      p.weights.push_back(Matrix::Zero(dims[k + 1], dims[k]));
      p.biases.push_back(Vector::Zero(dims[k + 1]));
    }
    return p;
  }

  MlpParams zeros_like() const {
    MlpParams g = *this;
    for (auto& w : g.weights) w.setZero();
    for (auto& b : g.biases) b.setZero();
    return g;
  }

  std::size_t layer_count() const { return weights.size(); }
  Index input_dim() const { return weights.front().cols(); }
  Index output_dim() const { return weights.back().rows(); }

  std::vector<Index> dims() const {
    std::vector<Index> d{input_dim()};
    for (const auto& w : weights) d.push_back(w.rows());
    return d;
  }

  Index parameter_count() const {
    Index n = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
    return n;
  }

  bool all_finite() const {
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (!weights[k].allFinite() || !biases[k].allFinite()) return false;
    }
    return true;
  }

  MlpParams& operator+=(const MlpParams& o) {
    for (std::size_t k = 0; k < weights.size(); ++k) {
      weights[k] += o.weights[k];
      biases[k] += o.biases[k];
    }
    return *this;
  }

  bool activated(std::size_t layer) const {
    return layer + 1 < weights.size() || output_activation;
  }
};

/// Default decoder shape: 32 inputs, three 32-wide hidden layers, RGB out.
inline std::vector<Index> default_mlp_dims() { return {32, 32, 32, 32, 3}; }

/// He-uniform weights (LeakyReLU gain), zero biases.
template <typename Scalar>
void he_uniform_init(MlpParams<Scalar>& p, std::mt19937_64& rng) {
  const double a = double(p.leaky_slope);
  const double gain = std::sqrt(2.0 / (1.0 + a * a));
  for (auto& w : p.weights) {
    const double bound = gain * std::sqrt(3.0 / double(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = Scalar(dist(rng));
  }
  for (auto& b : p.biases) b.setZero();
}

template <typename Scalar>
struct MlpCache {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Matrix> inputs;  // a_{k-1} fed into layer k
  std::vector<Matrix> pre;     // z_k = W_k a_{k-1} + b_k
};

namespace detail {

template <typename Scalar>
struct LeakyRelu {
  Scalar slope;
  Scalar operator()(Scalar z) const { return z > Scalar(0) ? z : slope * z; }
};

template <typename Scalar>
struct LeakyReluGrad {
  Scalar slope;
  Scalar operator()(Scalar z) const { return z > Scalar(0) ? Scalar(1) : slope; }
};

}  // namespace detail

/// x is input_dim x batch; returns output_dim x batch.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mlp_forward(
    const MlpParams<Scalar>& p,
    const std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>>& x,
    MlpCache<Scalar>* cache = nullptr) {
  using Matrix = typename MlpParams<Scalar>::Matrix;
  if (x.rows() != p.input_dim()) throw Error(ErrorKind::Argument, "mlp_forward: input dim mismatch");
  if (cache) {
    cache->inputs.resize(p.layer_count());
    cache->pre.resize(p.layer_count());
  }
  Matrix a = x;
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    Matrix z = p.weights[k] * a;
    z.colwise() += p.biases[k];
    if (cache) {
      cache->inputs[k] = std::move(a);
      cache->pre[k] = z;
    }
    a = p.activated(k) ? Matrix(z.unaryExpr(detail::LeakyRelu<Scalar>{p.leaky_slope})) : std::move(z);
  }
  return a;
}

template <typename Scalar>
struct MlpBackward {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> grad_x;
  MlpParams<Scalar> grad_params;
};

/// Reverse pass for a cached batch. Parameter gradients are summed over the
/// batch columns. The LeakyReLU derivative at exactly zero is the slope.
template <typename Scalar>
MlpBackward<Scalar> mlp_backward(
    const MlpParams<Scalar>& p, const MlpCache<Scalar>& cache,
    const std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>>& grad_y) {
  using Matrix = typename MlpParams<Scalar>::Matrix;
  if (cache.pre.size() != p.layer_count()) throw Error(ErrorKind::Internal, "mlp_backward: stale cache");
  MlpBackward<Scalar> out{Matrix(), p.zeros_like()};
  Matrix g = grad_y;
  for (std::size_t k = p.layer_count(); k-- > 0;) {
    if (p.activated(k)) {
      g.array() *= cache.pre[k].unaryExpr(detail::LeakyReluGrad<Scalar>{p.leaky_slope}).array();
    }
    out.grad_params.weights[k].noalias() = g * cache.inputs[k].transpose();
    out.grad_params.biases[k] = g.rowwise().sum();
    Matrix next = p.weights[k].transpose() * g;
    g = std::move(next);
  }
  out.grad_x = std::move(g);
  return out;
}

/// Single-sample forward used on the query path.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mlp_forward_single(const MlpParams<Scalar>& p,
                                                           const Eigen::MatrixBase<Derived>& x) {
  using Vector = typename MlpParams<Scalar>::Vector;
  Vector a = x;
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    Vector z = p.weights[k] * a + p.biases[k];
    a = p.activated(k) ? Vector(z.unaryExpr(detail::LeakyRelu<Scalar>{p.leaky_slope})) : std::move(z);
  }
  return a;
}

}  // namespace btf
