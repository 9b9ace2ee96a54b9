#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>

#include "avse/core/random.hpp"
#include "avse/nn/layer.hpp"

namespace avse::nn {

template <class T>
class LeakyRelu : public Layer<T> {
 public:
  explicit LeakyRelu(double slope) : slope_(static_cast<T>(slope)) {}
  std::string kind() const override { return "leaky_relu"; }
  T slope() const { return slope_; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> y(x.shape());
    const T* src = x.data();
    T* dst = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] >= T(0) ? src[i] : slope_ * src[i];
    if (mode == Mode::train) input_ = x;
    else input_.reset();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(input_.has_value());
    if (grad_out.shape() != input_->shape()) throw ShapeError("leaky_relu backward: bad grad shape");
    Tensor<T> dx(grad_out.shape());
    const T* x = input_->data();
    const T* g = grad_out.data();
    T* d = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i) d[i] = x[i] >= T(0) ? g[i] : slope_ * g[i];
    input_.reset();
    return dx;
  }

 private:
  T slope_;
  std::optional<Tensor<T>> input_;
};

// 2×2 max pooling with stride 2; odd edges form partial windows.
template <class T>
class MaxPool2 : public Layer<T> {
 public:
  std::string kind() const override { return "maxpool"; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (x.rank() != 4) throw ShapeError("maxpool2: expected NCHW, got " + to_string(x.shape()));
    const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
    Tensor<T> y({x.dim(0), x.dim(1), oh, ow});
    std::vector<std::uint32_t> arg(mode == Mode::train ? y.size() : 0);
    for (std::size_t p = 0; p < planes; ++p) {
      const T* src = x.data() + p * h * w;
      T* dst = y.data() + p * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_i = 0;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            const std::size_t iy = 2 * oy + dy;
            if (iy >= h) break;
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t ix = 2 * ox + dx;
              if (ix >= w) break;
              const T v = src[iy * w + ix];
              if (v > best || (dy == 0 && dx == 0)) {
                best = v;
                best_i = iy * w + ix;
              }
            }
          }
          dst[oy * ow + ox] = best;
          if (!arg.empty()) arg[p * oh * ow + oy * ow + ox] = static_cast<std::uint32_t>(best_i);
        }
      }
    }
    if (mode == Mode::train) cache_ = Cache{x.shape(), std::move(arg)};
    else cache_.reset();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(cache_.has_value());
    const Shape& in = cache_->in_shape;
    const std::size_t planes = in[0] * in[1], hw = in[2] * in[3];
    const std::size_t ohw = ((in[2] + 1) / 2) * ((in[3] + 1) / 2);
    if (grad_out.size() != planes * ohw) throw ShapeError("maxpool2 backward: bad grad shape");
    Tensor<T> dx(in);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t i = 0; i < ohw; ++i) dx[p * hw + cache_->argmax[p * ohw + i]] += grad_out[p * ohw + i];
    cache_.reset();
    return dx;
  }

 private:
  struct Cache {
    Shape in_shape;
    std::vector<std::uint32_t> argmax;
  };
  std::optional<Cache> cache_;
};

// Inverted dropout: survivors scaled by 1/(1-rate) in train mode, identity in
// infer mode. Masks are drawn from a generator shared across the network.
template <class T>
class Dropout : public Layer<T> {
 public:
  Dropout(double rate, std::shared_ptr<Rng> rng) : rate_(rate), rng_(std::move(rng)) {
    if (rate_ < 0.0 || rate_ >= 1.0) throw ShapeError("dropout rate must lie in [0, 1)");
  }
  std::string kind() const override { return "dropout"; }
  double rate() const { return rate_; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (mode == Mode::infer || rate_ == 0.0) {
      mask_ = mode == Mode::train ? std::optional<AlignedVector<T>>(AlignedVector<T>{}) : std::nullopt;
      return x;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    AlignedVector<T> mask(x.size());
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask[i] = uniform01(*rng_) < rate_ ? T(0) : keep_scale;
      y[i] = x[i] * mask[i];
    }
    mask_ = std::move(mask);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(mask_.has_value());
    if (mask_->empty()) {
      mask_.reset();
      return grad_out;
    }
    if (grad_out.size() != mask_->size()) throw ShapeError("dropout backward: bad grad shape");
    Tensor<T> dx(grad_out.shape());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * (*mask_)[i];
    mask_.reset();
    return dx;
  }

 private:
  double rate_;
  std::shared_ptr<Rng> rng_;
  std::optional<AlignedVector<T>> mask_;
};

}  // namespace avse::nn
