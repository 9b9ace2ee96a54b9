#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "avse/core/error.hpp"
#include "avse/nn/layer.hpp"

namespace avse::train {

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
struct AdamState {
  AdamOptions options;
  double lr = options.lr;
  std::uint64_t step = 0;
  std::vector<nn::Tensor<T>> m, v;

  AdamState() = default;
  AdamState(const std::vector<nn::Parameter<T>*>& params, AdamOptions opt) : options(opt), lr(opt.lr) {
    if (!(opt.lr > 0.0)) throw ConfigError("learning rate must be positive");
    for (const auto* p : params) {
      m.emplace_back(p->value.shape());
      v.emplace_back(p->value.shape());
    }
  }
};

// One bias-corrected Adam update. Gradients are checked before any parameter
// is touched, so a non-finite gradient leaves the model unchanged.
template <class T>
void adam_step(const std::vector<nn::Parameter<T>*>& params, AdamState<T>& s) {
  if (params.size() != s.m.size()) throw nn::ShapeError("adam_step: parameter count does not match optimizer state");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* p = params[i];
    if (p->grad.shape() != p->value.shape() || s.m[i].shape() != p->value.shape())
      throw nn::ShapeError("adam_step: shape mismatch for " + p->name);
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient in " + p->name);
  }
  ++s.step;
  const double b1 = s.options.beta1, b2 = s.options.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    const auto& grad = params[i]->grad;
    T* m = s.m[i].data();
    T* v = s.v[i].data();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = b1 * m[k] + (1.0 - b1) * g;
      const double vk = b2 * v[k] + (1.0 - b2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      value[k] = static_cast<T>(value[k] - s.lr * (mk / c1) / (std::sqrt(vk / c2) + s.options.epsilon));
    }
  }
}

}  // namespace avse::train
