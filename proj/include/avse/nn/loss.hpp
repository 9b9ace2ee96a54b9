#pragma once

#include "avse/nn/tensor.hpp"

namespace avse::nn {

// Mean over all elements of (pred - target)².
template <class T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape())
    throw ShapeError("mse_loss: shape " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

// d(mse)/d(pred) = 2(pred - target)/numel.
template <class T>
Tensor<T> mse_grad(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) throw ShapeError("mse_grad: shape mismatch");
  Tensor<T> g(pred.shape());
  const T scale = static_cast<T>(2.0 / static_cast<double>(pred.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
  return g;
}

}  // namespace avse::nn
