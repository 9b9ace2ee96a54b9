#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "avse/nn/tensor.hpp"

namespace avse::nn {

enum class Mode { train, infer };

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}
  void zero_grad() { grad.fill(T(0)); }
};

// Non-trainable persisted state (batchnorm running statistics).
template <class T>
struct Buffer {
  std::string name;
  Tensor<T>* tensor;
};

// A differentiable layer. forward() in train mode caches what backward()
// needs; backward() consumes that cache, accumulates parameter gradients and
// returns the gradient with respect to the layer input.
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  virtual std::vector<Buffer<T>> buffers() { return {}; }
  virtual void set_name(std::string name) { name_ = std::move(name); }
  const std::string& name() const { return name_; }

 protected:
  void require_cache(bool have) const {
    if (!have) throw std::logic_error(kind() + " '" + name_ + "': backward called without a train-mode forward");
  }

  std::string name_;
};

template <class T>
using LayerPtr = std::unique_ptr<Layer<T>>;

}  // namespace avse::nn
