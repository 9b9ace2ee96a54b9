#pragma once

#include "avse/model/network.hpp"
#include "avse/nn/gradcheck.hpp"

namespace avse::test {

template <class T>
nn::Tensor<T> random_input(nn::Shape shape, Rng& rng, double scale = 1.0) {
  nn::Tensor<T> t(std::move(shape));
  for (auto& v : t.span()) v = static_cast<T>(scale * normal(rng));
  return t;
}

// Central-difference check of a whole network (64-bit) under MSE against a
// random target. Dropout masks are replayed by reseeding before each forward.
inline nn::GradCheckReport check_network_gradients(const model::NetworkConfig& cfg, std::size_t batch,
                                                   std::size_t samples_per_tensor, std::uint64_t seed) {
  model::Network<double> net(cfg);
  Rng rng(seed);
  const bool av = cfg.mode == model::NetworkMode::audio_visual;
  auto video = random_input<double>({batch, 5, 128, 128}, rng);
  auto audio = random_input<double>({batch, 1, 80, 20}, rng);
  const auto target = random_input<double>({batch, 1, 80, 20}, rng);
  // Nudge batchnorm affine parameters off their identity initialisation.
  for (auto& [name, p] : net.named_parameters())
    if (name.ends_with("gamma") || name.ends_with("beta"))
      for (auto& v : p->value.span()) v += 0.3 * normal(rng);

  const std::uint64_t mask_seed = seed ^ 0xABCDEF;
  auto run = [&]() {
    net.dropout_rng() = Rng(mask_seed);
    return net.forward(av ? &video : nullptr, audio, nn::Mode::train);
  };
  const auto y = run();
  net.zero_grad();
  const auto in_grads = net.backward(nn::mse_grad(y, target));
  auto loss = [&]() { return nn::mse_loss(run(), target); };

  nn::GradCheckReport report;
  report.entries.push_back(nn::check_tensor_gradient("input.audio", audio, in_grads.audio, loss, samples_per_tensor, rng));
  if (av)
    report.entries.push_back(
        nn::check_tensor_gradient("input.video", video, in_grads.video, loss, samples_per_tensor, rng));
  std::vector<std::pair<std::string, nn::Tensor<double>>> analytic;
  for (auto& [name, p] : net.named_parameters()) analytic.emplace_back(name, p->grad);
  auto params = net.named_parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    report.entries.push_back(nn::check_tensor_gradient(params[i].first, params[i].second->value, analytic[i].second,
                                                       loss, samples_per_tensor, rng));
  return report;
}

}  // namespace avse::test
