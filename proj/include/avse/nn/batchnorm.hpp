#pragma once

#include <cmath>
#include <optional>

#include "avse/nn/layer.hpp"

namespace avse::nn {

struct BatchNormOptions {
  double momentum = 0.99;
  double epsilon = 1e-3;
};

// Per-channel normalisation over batch and all trailing (spatial) dims of an
// [N, C, ...] tensor. Train mode uses batch statistics and folds them into the
// running statistics; infer mode uses the running statistics.
template <class T>
class BatchNorm : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t channels, BatchNormOptions opt = {})
      : channels_(channels), opt_(opt), gamma_("gamma", {channels}), beta_("beta", {channels}),
        running_mean_({channels}, T(0)), running_var_({channels}, T(1)) {
    gamma_.value.fill(T(1));
  }

  std::string kind() const override { return "batchnorm"; }
  std::size_t channels() const { return channels_; }
  const BatchNormOptions& options() const { return opt_; }
  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (x.rank() < 2 || x.dim(1) != channels_)
      throw ShapeError("batchnorm: expected [N," + std::to_string(channels_) + ",...], got " + to_string(x.shape()));
    const std::size_t batch = x.dim(0), spatial = x.sample_size() / channels_;
    const std::size_t count = batch * spatial;
    Tensor<T> y(x.shape());

    if (mode == Mode::infer) {
      for (std::size_t c = 0; c < channels_; ++c) {
        const T scale = gamma_.value[c] / static_cast<T>(std::sqrt(static_cast<double>(running_var_[c]) + opt_.epsilon));
        const T shift = beta_.value[c] - running_mean_[c] * scale;
        for (std::size_t n = 0; n < batch; ++n) {
          const T* src = x.sample(n) + c * spatial;
          T* dst = y.sample(n) + c * spatial;
          for (std::size_t i = 0; i < spatial; ++i) dst[i] = src[i] * scale + shift;
        }
      }
      cache_.reset();
      return y;
    }

    if (count < 2) throw ShapeError("batchnorm: train mode needs at least 2 values per channel (batch x spatial)");
    Cache cache{Tensor<T>(x.shape()), AlignedVector<T>(channels_)};
    for (std::size_t c = 0; c < channels_; ++c) {
      double sum = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* src = x.sample(n) + c * spatial;
        for (std::size_t i = 0; i < spatial; ++i) sum += src[i];
      }
      const double mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* src = x.sample(n) + c * spatial;
        for (std::size_t i = 0; i < spatial; ++i) {
          const double d = src[i] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      const T inv_std = static_cast<T>(1.0 / std::sqrt(var + opt_.epsilon));
      cache.inv_std[c] = inv_std;
      const T m = static_cast<T>(mean), g = gamma_.value[c], b = beta_.value[c];
      for (std::size_t n = 0; n < batch; ++n) {
        const T* src = x.sample(n) + c * spatial;
        T* xh = cache.x_hat.sample(n) + c * spatial;
        T* dst = y.sample(n) + c * spatial;
        for (std::size_t i = 0; i < spatial; ++i) {
          xh[i] = (src[i] - m) * inv_std;
          dst[i] = g * xh[i] + b;
        }
      }
      running_mean_[c] = static_cast<T>(opt_.momentum * running_mean_[c] + (1.0 - opt_.momentum) * mean);
      running_var_[c] = static_cast<T>(opt_.momentum * running_var_[c] + (1.0 - opt_.momentum) * var);
    }
    cache_ = std::move(cache);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(cache_.has_value());
    const Tensor<T>& xh = cache_->x_hat;
    if (grad_out.shape() != xh.shape()) throw ShapeError("batchnorm backward: bad grad shape");
    const std::size_t batch = xh.dim(0), spatial = xh.sample_size() / channels_;
    const double count = static_cast<double>(batch * spatial);
    Tensor<T> dx(xh.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* g = grad_out.sample(n) + c * spatial;
        const T* h = xh.sample(n) + c * spatial;
        for (std::size_t i = 0; i < spatial; ++i) {
          sum_g += g[i];
          sum_gx += static_cast<double>(g[i]) * h[i];
        }
      }
      beta_.grad[c] += static_cast<T>(sum_g);
      gamma_.grad[c] += static_cast<T>(sum_gx);
      const T k = static_cast<T>(gamma_.value[c] * cache_->inv_std[c] / count);
      const T mg = static_cast<T>(sum_g), mgx = static_cast<T>(sum_gx), cnt = static_cast<T>(count);
      for (std::size_t n = 0; n < batch; ++n) {
        const T* g = grad_out.sample(n) + c * spatial;
        const T* h = xh.sample(n) + c * spatial;
        T* d = dx.sample(n) + c * spatial;
        for (std::size_t i = 0; i < spatial; ++i) d[i] = k * (cnt * g[i] - mg - h[i] * mgx);
      }
    }
    cache_.reset();
    return dx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Buffer<T>> buffers() override {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
  }

 private:
  struct Cache {
    Tensor<T> x_hat;
    AlignedVector<T> inv_std;
  };

  std::size_t channels_;
  BatchNormOptions opt_;
  Parameter<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  std::optional<Cache> cache_;
};

}  // namespace avse::nn
