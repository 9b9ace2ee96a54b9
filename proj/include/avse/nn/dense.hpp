#pragma once

#include <optional>

#include "avse/nn/conv.hpp"

namespace avse::nn {

// y = W·x + b over the flattened per-sample input. Weight layout [out, in].
template <class T>
class Dense : public Layer<T> {
 public:
  Dense(std::size_t in_features, std::size_t out_features)
      : in_(in_features), out_(out_features), weight_("weight", {out_features, in_features}),
        bias_("bias", {out_features}) {}

  std::string kind() const override { return "dense"; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

  void init(Rng& rng) {
    he_uniform(weight_.value, in_, rng);
    bias_.value.fill(T(0));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (x.rank() < 1 || x.sample_size() != in_)
      throw ShapeError("dense: expected " + std::to_string(in_) + " features per sample, got " + to_string(x.shape()));
    const std::size_t batch = x.dim(0);
    Tensor<T> y({batch, out_});
    MatrixMap<T> out(y.data(), batch, out_);
    out.noalias() = ConstMatrixMap<T>(x.data(), batch, in_) * ConstMatrixMap<T>(weight_.value.data(), out_, in_).transpose();
    out.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.value.data(), out_);
    if (mode == Mode::train) input_ = x;
    else input_.reset();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(input_.has_value());
    const Tensor<T>& x = *input_;
    const std::size_t batch = x.dim(0);
    if (grad_out.shape() != Shape{batch, out_}) throw ShapeError("dense backward: bad grad shape");
    ConstMatrixMap<T> go(grad_out.data(), batch, out_);
    ConstMatrixMap<T> xin(x.data(), batch, in_);
    MatrixMap<T>(weight_.grad.data(), out_, in_).noalias() += go.transpose() * xin;
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.grad.data(), out_) += go.colwise().sum();
    Tensor<T> dx(x.shape());
    MatrixMap<T>(dx.data(), batch, in_).noalias() = go * ConstMatrixMap<T>(weight_.value.data(), out_, in_);
    input_.reset();
    return dx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

 private:
  std::size_t in_, out_;
  Parameter<T> weight_, bias_;
  std::optional<Tensor<T>> input_;
};

// Per-sample reshape (the batch dimension is kept).
template <class T>
class Reshape : public Layer<T> {
 public:
  explicit Reshape(Shape per_sample) : target_(std::move(per_sample)) {}
  std::string kind() const override { return "reshape"; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (x.rank() < 1 || x.sample_size() != numel(target_))
      throw ShapeError("reshape: cannot map " + to_string(x.shape()) + " to per-sample " + to_string(target_));
    Shape s{x.dim(0)};
    s.insert(s.end(), target_.begin(), target_.end());
    if (mode == Mode::train) in_shape_ = x.shape();
    return x.reshaped(std::move(s));
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(in_shape_.has_value());
    auto g = grad_out.reshaped(*in_shape_);
    in_shape_.reset();
    return g;
  }

 private:
  Shape target_;
  std::optional<Shape> in_shape_;
};

}  // namespace avse::nn
