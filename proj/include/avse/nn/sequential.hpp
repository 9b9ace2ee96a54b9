#pragma once

#include <functional>

#include "avse/nn/activation.hpp"
#include "avse/nn/batchnorm.hpp"
#include "avse/nn/conv.hpp"
#include "avse/nn/dense.hpp"

namespace avse::nn {

// Called after every layer during forward: (layer, output).
template <class T>
using ForwardObserver = std::function<void(const Layer<T>&, const Tensor<T>&)>;

template <class T>
class Sequential {
 public:
  Sequential() = default;
  explicit Sequential(std::string name) : name_(std::move(name)) {}

  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layer->set_name(name_ + "." + std::to_string(layers_.size()) + "." + layer->kind());
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(Tensor<T> x, Mode mode, const ForwardObserver<T>* observer = nullptr) {
    for (auto& l : layers_) {
      x = l->forward(x, mode);
      if (observer && *observer) (*observer)(*l, x);
    }
    return x;
  }

  Tensor<T> backward(Tensor<T> grad) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) grad = (*it)->backward(grad);
    return grad;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& l : layers_)
      for (auto* p : l->parameters()) out.push_back(p);
    return out;
  }

  // Qualified names, "<layer name>.<param name>".
  std::vector<std::pair<std::string, Parameter<T>*>> named_parameters() {
    std::vector<std::pair<std::string, Parameter<T>*>> out;
    for (auto& l : layers_)
      for (auto* p : l->parameters()) out.emplace_back(l->name() + "." + p->name, p);
    return out;
  }

  std::vector<std::pair<std::string, Tensor<T>*>> named_buffers() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    for (auto& l : layers_)
      for (auto b : l->buffers()) out.emplace_back(l->name() + "." + b.name, b.tensor);
    return out;
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& operator[](std::size_t i) { return *layers_[i]; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::vector<LayerPtr<T>> layers_;
};

}  // namespace avse::nn
