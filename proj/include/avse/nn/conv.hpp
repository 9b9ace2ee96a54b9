#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "avse/core/random.hpp"
#include "avse/nn/layer.hpp"

namespace avse::nn {

struct Kernel {
  std::size_t h = 1, w = 1;
};
struct Stride {
  std::size_t h = 1, w = 1;
};

// "Same" padding for a strided convolution over an input of (height, width):
// output = ceil(input / stride), padding split with the smaller half on top/left.
struct ConvGeometry {
  std::size_t channels = 0, in_h = 0, in_w = 0;
  Kernel kernel;
  Stride stride;
  std::size_t out_h = 0, out_w = 0, pad_top = 0, pad_left = 0;

  ConvGeometry() = default;
  ConvGeometry(std::size_t c, std::size_t h, std::size_t w, Kernel k, Stride s)
      : channels(c), in_h(h), in_w(w), kernel(k), stride(s) {
    out_h = (h + s.h - 1) / s.h;
    out_w = (w + s.w - 1) / s.w;
    const auto pad_h = static_cast<std::ptrdiff_t>((out_h - 1) * s.h + k.h) - static_cast<std::ptrdiff_t>(h);
    const auto pad_w = static_cast<std::ptrdiff_t>((out_w - 1) * s.w + k.w) - static_cast<std::ptrdiff_t>(w);
    pad_top = static_cast<std::size_t>(std::max<std::ptrdiff_t>(pad_h, 0)) / 2;
    pad_left = static_cast<std::size_t>(std::max<std::ptrdiff_t>(pad_w, 0)) / 2;
  }

  std::size_t patch_size() const { return channels * kernel.h * kernel.w; }
  std::size_t out_pixels() const { return out_h * out_w; }

  // image (C×H×W) -> columns (C·kh·kw × out_h·out_w)
  template <class T>
  void im2col(const T* image, T* cols) const {
    const std::size_t npix = out_pixels();
    for (std::size_t c = 0; c < channels; ++c) {
      const T* plane = image + c * in_h * in_w;
      for (std::size_t ki = 0; ki < kernel.h; ++ki) {
        for (std::size_t kj = 0; kj < kernel.w; ++kj) {
          T* row = cols + ((c * kernel.h + ki) * kernel.w + kj) * npix;
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride.h + ki) - static_cast<std::ptrdiff_t>(pad_top);
            T* dst = row + oy * out_w;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) {
              std::fill(dst, dst + out_w, T(0));
              continue;
            }
            const T* src = plane + static_cast<std::size_t>(iy) * in_w;
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * stride.w + kj) - static_cast<std::ptrdiff_t>(pad_left);
              dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) ? T(0) : src[ix];
            }
          }
        }
      }
    }
  }

  // Adjoint of im2col: scatter-add columns back into a zeroed image.
  template <class T>
  void col2im(const T* cols, T* image) const {
    std::fill(image, image + channels * in_h * in_w, T(0));
    const std::size_t npix = out_pixels();
    for (std::size_t c = 0; c < channels; ++c) {
      T* plane = image + c * in_h * in_w;
      for (std::size_t ki = 0; ki < kernel.h; ++ki) {
        for (std::size_t kj = 0; kj < kernel.w; ++kj) {
          const T* row = cols + ((c * kernel.h + ki) * kernel.w + kj) * npix;
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride.h + ki) - static_cast<std::ptrdiff_t>(pad_top);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
            T* dst = plane + static_cast<std::size_t>(iy) * in_w;
            const T* src = row + oy * out_w;
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * stride.w + kj) - static_cast<std::ptrdiff_t>(pad_left);
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(in_w)) dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }
};

// He-uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <class T>
void he_uniform(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w.span()) v = static_cast<T>(uniform(rng, -limit, limit));
}

inline void check_rank4(const Shape& s, std::size_t channels, const std::string& who) {
  if (s.size() != 4 || s[1] != channels)
    throw ShapeError(who + ": expected [N," + std::to_string(channels) + ",H,W], got " + to_string(s));
}

// Cross-correlation with "same" padding. Weight layout [out, in, kh, kw].
template <class T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, Kernel k, Stride s)
      : in_(in_channels), out_(out_channels), kernel_(k), stride_(s),
        weight_("weight", {out_channels, in_channels, k.h, k.w}), bias_("bias", {out_channels}) {}

  std::string kind() const override { return "conv"; }
  Kernel kernel() const { return kernel_; }
  Stride stride() const { return stride_; }
  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

  void init(Rng& rng) {
    he_uniform(weight_.value, in_ * kernel_.h * kernel_.w, rng);
    bias_.value.fill(T(0));
  }

  Shape output_shape(const Shape& in) const {
    ConvGeometry g(in_, in[2], in[3], kernel_, stride_);
    return {in[0], out_, g.out_h, g.out_w};
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    check_rank4(x.shape(), in_, "conv2d");
    const ConvGeometry g(in_, x.dim(2), x.dim(3), kernel_, stride_);
    const std::size_t batch = x.dim(0), npix = g.out_pixels();
    Tensor<T> y({batch, out_, g.out_h, g.out_w});
    AlignedVector<T> cols(g.patch_size() * npix);
    ConstMatrixMap<T> w(weight_.value.data(), out_, g.patch_size());
    for (std::size_t n = 0; n < batch; ++n) {
      g.im2col(x.sample(n), cols.data());
      MatrixMap<T> out(y.sample(n), out_, npix);
      out.noalias() = w * ConstMatrixMap<T>(cols.data(), g.patch_size(), npix);
      for (std::size_t c = 0; c < out_; ++c) out.row(c).array() += bias_.value[c];
    }
    if (mode == Mode::train) input_ = x;
    else input_.reset();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(input_.has_value());
    const Tensor<T>& x = *input_;
    const ConvGeometry g(in_, x.dim(2), x.dim(3), kernel_, stride_);
    const std::size_t batch = x.dim(0), npix = g.out_pixels();
    if (grad_out.shape() != Shape{batch, out_, g.out_h, g.out_w}) throw ShapeError("conv2d backward: bad grad shape");
    Tensor<T> dx(x.shape());
    AlignedVector<T> cols(g.patch_size() * npix), dcols(g.patch_size() * npix);
    ConstMatrixMap<T> w(weight_.value.data(), out_, g.patch_size());
    MatrixMap<T> dw(weight_.grad.data(), out_, g.patch_size());
    for (std::size_t n = 0; n < batch; ++n) {
      ConstMatrixMap<T> go(grad_out.sample(n), out_, npix);
      g.im2col(x.sample(n), cols.data());
      dw.noalias() += go * ConstMatrixMap<T>(cols.data(), g.patch_size(), npix).transpose();
      for (std::size_t c = 0; c < out_; ++c) bias_.grad[c] += go.row(c).sum();
      MatrixMap<T>(dcols.data(), g.patch_size(), npix).noalias() = w.transpose() * go;
      g.col2im(dcols.data(), dx.sample(n));
    }
    input_.reset();
    return dx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

 private:
  std::size_t in_, out_;
  Kernel kernel_;
  Stride stride_;
  Parameter<T> weight_, bias_;
  std::optional<Tensor<T>> input_;
};

// Transposed convolution: the adjoint of a "same" Conv2d that maps an
// (H·sh × W·sw) image to (H × W), plus bias. Weight layout [in, out, kh, kw],
// which is the weight of that Conv2d read with its channel roles swapped.
template <class T>
class ConvTranspose2d : public Layer<T> {
 public:
  ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, Kernel k, Stride s)
      : in_(in_channels), out_(out_channels), kernel_(k), stride_(s),
        weight_("weight", {in_channels, out_channels, k.h, k.w}), bias_("bias", {out_channels}) {}

  std::string kind() const override { return "conv_transpose"; }
  Kernel kernel() const { return kernel_; }
  Stride stride() const { return stride_; }
  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

  void init(Rng& rng) {
    // Each output pixel receives in·kh·kw/(sh·sw) contributions on average.
    const std::size_t fan = std::max<std::size_t>(1, in_ * kernel_.h * kernel_.w / (stride_.h * stride_.w));
    he_uniform(weight_.value, fan, rng);
    bias_.value.fill(T(0));
  }

  Shape output_shape(const Shape& in) const { return {in[0], out_, in[2] * stride_.h, in[3] * stride_.w}; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    check_rank4(x.shape(), in_, "conv2d_transpose");
    const ConvGeometry g = geometry(x.shape());
    const std::size_t batch = x.dim(0), npix = g.out_pixels();
    Tensor<T> y({batch, out_, g.in_h, g.in_w});
    AlignedVector<T> dcols(g.patch_size() * npix);
    ConstMatrixMap<T> w(weight_.value.data(), in_, g.patch_size());
    for (std::size_t n = 0; n < batch; ++n) {
      MatrixMap<T>(dcols.data(), g.patch_size(), npix).noalias() =
          w.transpose() * ConstMatrixMap<T>(x.sample(n), in_, npix);
      g.col2im(dcols.data(), y.sample(n));
      MatrixMap<T> out(y.sample(n), out_, g.in_h * g.in_w);
      for (std::size_t c = 0; c < out_; ++c) out.row(c).array() += bias_.value[c];
    }
    if (mode == Mode::train) input_ = x;
    else input_.reset();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    this->require_cache(input_.has_value());
    const Tensor<T>& x = *input_;
    const ConvGeometry g = geometry(x.shape());
    const std::size_t batch = x.dim(0), npix = g.out_pixels();
    if (grad_out.shape() != Shape{batch, out_, g.in_h, g.in_w})
      throw ShapeError("conv2d_transpose backward: bad grad shape");
    Tensor<T> dx(x.shape());
    AlignedVector<T> cols(g.patch_size() * npix);
    ConstMatrixMap<T> w(weight_.value.data(), in_, g.patch_size());
    MatrixMap<T> dw(weight_.grad.data(), in_, g.patch_size());
    for (std::size_t n = 0; n < batch; ++n) {
      g.im2col(grad_out.sample(n), cols.data());
      ConstMatrixMap<T> c(cols.data(), g.patch_size(), npix);
      ConstMatrixMap<T> xn(x.sample(n), in_, npix);
      dw.noalias() += xn * c.transpose();
      MatrixMap<T>(dx.sample(n), in_, npix).noalias() = w * c;
      ConstMatrixMap<T> go(grad_out.sample(n), out_, g.in_h * g.in_w);
      for (std::size_t ch = 0; ch < out_; ++ch) bias_.grad[ch] += go.row(ch).sum();
    }
    input_.reset();
    return dx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

 private:
  ConvGeometry geometry(const Shape& in) const {
    return ConvGeometry(out_, in[2] * stride_.h, in[3] * stride_.w, kernel_, stride_);
  }

  std::size_t in_, out_;
  Kernel kernel_;
  Stride stride_;
  Parameter<T> weight_, bias_;
  std::optional<Tensor<T>> input_;
};

}  // namespace avse::nn
