#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "avse/core/random.hpp"
#include "avse/nn/layer.hpp"

namespace avse::nn {

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;  // max|analytic - numeric| / max(max|analytic|, max|numeric|, floor)
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.relative_error);
    return w;
  }
};

inline constexpr double kGradMagnitudeFloor = 1e-5;

// Compares `analytic` against central differences of `loss` with respect to
// `value`, on up to `samples` randomly chosen coordinates.
inline GradCheckEntry check_tensor_gradient(const std::string& name, Tensor<double>& value,
                                            const Tensor<double>& analytic, const std::function<double()>& loss,
                                            std::size_t samples, Rng& rng, double step = 1e-5) {
  std::vector<std::size_t> idx;
  if (value.size() <= samples) {
    for (std::size_t i = 0; i < value.size(); ++i) idx.push_back(i);
  } else {
    for (std::size_t k = 0; k < samples; ++k) idx.push_back(uniform_index(rng, value.size()));
  }
  double max_diff = 0.0, max_mag = 0.0;
  for (std::size_t i : idx) {
    const double saved = value[i];
    value[i] = saved + step;
    const double up = loss();
    value[i] = saved - step;
    const double down = loss();
    value[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    max_diff = std::max(max_diff, std::abs(numeric - analytic[i]));
    max_mag = std::max({max_mag, std::abs(numeric), std::abs(analytic[i])});
  }
  // Tensors whose true gradient is structurally zero (a bias feeding a
  // batchnorm) only carry finite-difference noise; the floor keeps that noise
  // from being read as a relative error of 1.
  GradCheckEntry e{name, max_diff / std::max(max_mag, kGradMagnitudeFloor), idx.size()};
  if (std::getenv("AVSE_GC_DEBUG")) std::fprintf(stderr, "%s diff=%g mag=%g\n", name.c_str(), max_diff, max_mag);
  return e;
}

// Finite-difference check of a single layer under the loss <r, layer(x)> for a
// fixed random r. `before_forward` runs ahead of every forward pass (used to
// replay dropout masks).
inline GradCheckReport check_layer(Layer<double>& layer, Tensor<double> x, Rng& rng, std::size_t samples = 40,
                                   const std::function<void()>& before_forward = {}) {
  auto run = [&](const Tensor<double>& in, Mode mode) {
    if (before_forward) before_forward();
    return layer.forward(in, mode);
  };
  const Tensor<double> y0 = run(x, Mode::train);
  Tensor<double> r(y0.shape());
  for (auto& v : r.span()) v = normal(rng);
  for (auto* p : layer.parameters()) p->zero_grad();
  const Tensor<double> dx = layer.backward(r);

  std::vector<Tensor<double>> analytic;
  for (auto* p : layer.parameters()) analytic.push_back(p->grad);

  auto loss = [&]() { return dot(run(x, Mode::train), r); };
  GradCheckReport report;
  report.entries.push_back(check_tensor_gradient("input", x, dx, loss, samples, rng));
  auto params = layer.parameters();
  for (std::size_t k = 0; k < params.size(); ++k)
    report.entries.push_back(check_tensor_gradient(params[k]->name, params[k]->value, analytic[k], loss, samples, rng));
  return report;
}

}  // namespace avse::nn
