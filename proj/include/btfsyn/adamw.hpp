#pragma once

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <vector>

#include "btfsyn/error.hpp"

namespace btf {

/// One parameter tensor viewed as a flat array, with its gradient and
/// per-tensor learning rate and decoupled weight decay.
template <typename Scalar>
struct ParamSlot {
  Scalar* param;
  const Scalar* grad;
  Eigen::Index size;
  Scalar lr;
  Scalar weight_decay;
};

template <typename Scalar>
struct AdamWState {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  long step = 0;
  std::vector<Array> m;
  std::vector<Array> v;
};

/// p <- p * (1 - lr * wd), then the bias-corrected Adam update. Every
/// element is independent, so results do not depend on how tensors are
/// split into slots.
template <typename Scalar>
void adamw_step(std::span<const ParamSlot<Scalar>> slots, AdamWState<Scalar>& state) {
  using Array = typename AdamWState<Scalar>::Array;
  if (state.m.empty()) {
    for (const auto& s : slots) {
      state.m.push_back(Array::Zero(s.size));
      state.v.push_back(Array::Zero(s.size));
    }
  }
  if (state.m.size() != slots.size()) throw Error(ErrorKind::Internal, "adamw_step: slot count mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (state.m[i].size() != slots[i].size) throw Error(ErrorKind::Internal, "adamw_step: shape mismatch");
  }

  ++state.step;
  const Scalar bc1 = Scalar(1) - std::pow(state.beta1, Scalar(state.step));
  const Scalar bc2 = Scalar(1) - std::pow(state.beta2, Scalar(state.step));
  const Scalar bc2_sqrt = std::sqrt(bc2);

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& s = slots[i];
    Eigen::Map<Array> p(s.param, s.size);
    Eigen::Map<const Array> g(s.grad, s.size);
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (s.weight_decay != Scalar(0)) p *= Scalar(1) - s.lr * s.weight_decay;
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.square();
    const Scalar step_size = s.lr / bc1;
    p -= step_size * m / (v.sqrt() / bc2_sqrt + state.eps);
  }
}

}  // namespace btf
