#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "avse/core/error.hpp"
#include "avse/core/hash.hpp"
#include "avse/nn/conv.hpp"

namespace avse::model {

enum class NetworkMode { audio_visual, audio_only };

inline std::string to_string(NetworkMode m) { return m == NetworkMode::audio_visual ? "audio_visual" : "audio_only"; }
inline NetworkMode parse_network_mode(const std::string& s) {
  if (s == "audio_visual") return NetworkMode::audio_visual;
  if (s == "audio_only") return NetworkMode::audio_only;
  throw ConfigError("unknown network mode '" + s + "' (expected audio_visual or audio_only)");
}

struct ConvSpec {
  std::size_t filters = 0;
  nn::Kernel kernel;
  nn::Stride stride;
};

inline constexpr std::size_t kVideoFrames = 5;
inline constexpr std::size_t kFrameSize = 128;

// Video tower: 6 × (conv, BN, LeakyReLU, 2×2 max-pool, dropout), stride 1.
inline const std::vector<ConvSpec>& video_encoder_spec() {
  static const std::vector<ConvSpec> spec = {
      {128, {5, 5}, {1, 1}}, {128, {5, 5}, {1, 1}}, {256, {3, 3}, {1, 1}},
      {256, {3, 3}, {1, 1}}, {512, {3, 3}, {1, 1}}, {512, {3, 3}, {1, 1}},
  };
  return spec;
}

// Audio tower: 5 × (strided conv, BN, LeakyReLU).
inline const std::vector<ConvSpec>& audio_encoder_spec() {
  static const std::vector<ConvSpec> spec = {
      {64, {5, 5}, {2, 2}}, {64, {4, 4}, {1, 1}}, {128, {4, 4}, {2, 2}}, {128, {2, 2}, {2, 1}}, {128, {2, 2}, {2, 1}},
  };
  return spec;
}

// Mirror of the audio tower, taking 5×5 back to 80×20; the last layer has one
// filter and no activation.
inline std::vector<ConvSpec> default_decoder_spec() {
  return {{128, {2, 2}, {2, 1}}, {128, {2, 2}, {2, 1}}, {64, {4, 4}, {2, 2}}, {64, {4, 4}, {1, 1}}, {1, {5, 5}, {2, 2}}};
}

inline constexpr std::size_t kFcHidden = 1312;

struct NetworkConfig {
  NetworkMode mode = NetworkMode::audio_visual;
  double leaky_slope = 0.2;
  double dropout_rate = 0.25;
  std::vector<ConvSpec> decoder_spec = default_decoder_spec();
  std::uint64_t seed = 0;
  // Divides every filter count and the hidden FC width. 1 is the published
  // architecture; larger values give cheaper variants with the same topology.
  std::size_t width_divisor = 1;

  std::size_t scaled(std::size_t filters) const { return std::max<std::size_t>(1, filters / width_divisor); }

  std::size_t video_embedding() const {
    if (mode == NetworkMode::audio_only) return 0;
    std::size_t side = kFrameSize;
    for (std::size_t i = 0; i < video_encoder_spec().size(); ++i) side = (side + 1) / 2;
    return scaled(video_encoder_spec().back().filters) * side * side;
  }
  std::size_t audio_channels() const { return scaled(audio_encoder_spec().back().filters); }
  std::size_t audio_embedding() const { return audio_channels() * 5 * 5; }
  std::size_t fused_embedding() const { return video_embedding() + audio_embedding(); }
  std::size_t fc_hidden() const { return scaled(kFcHidden); }

  void validate() const {
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in [0, 1)");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (width_divisor == 0) throw ConfigError("width_divisor must be positive");
    if (decoder_spec.empty()) throw ConfigError("decoder_spec is empty");
    std::size_t h = 5, w = 5;
    for (const auto& l : decoder_spec) {
      if (l.filters == 0 || l.kernel.h == 0 || l.kernel.w == 0 || l.stride.h == 0 || l.stride.w == 0)
        throw ConfigError("decoder_spec: zero filters, kernel or stride");
      h *= l.stride.h;
      w *= l.stride.w;
    }
    if (h != 80 || w != 20)
      throw ConfigError("decoder_spec maps 5x5 to " + std::to_string(h) + "x" + std::to_string(w) + ", expected 80x20");
    if (decoder_spec.back().filters != 1) throw ConfigError("decoder_spec: last layer must have 1 filter");
  }

  // Architecture-defining fields only; the seed does not change the layout.
  nlohmann::json architecture_json() const {
    nlohmann::json dec = nlohmann::json::array();
    for (const auto& l : decoder_spec)
      dec.push_back({l.filters, l.kernel.h, l.kernel.w, l.stride.h, l.stride.w});
    return {{"mode", to_string(mode)},
            {"leaky_slope", leaky_slope},
            {"dropout_rate", dropout_rate},
            {"decoder_spec", dec},
            {"width_divisor", width_divisor}};
  }

  nlohmann::json to_json() const {
    auto j = architecture_json();
    j["seed"] = seed;
    return j;
  }

  static NetworkConfig from_json(const nlohmann::json& j) {
    NetworkConfig c;
    try {
      if (j.contains("mode")) c.mode = parse_network_mode(j.at("mode").get<std::string>());
      if (j.contains("leaky_slope")) c.leaky_slope = j.at("leaky_slope").get<double>();
      if (j.contains("dropout_rate")) c.dropout_rate = j.at("dropout_rate").get<double>();
      if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("width_divisor")) c.width_divisor = j.at("width_divisor").get<std::size_t>();
      if (j.contains("decoder_spec")) {
        c.decoder_spec.clear();
        for (const auto& l : j.at("decoder_spec")) {
          const auto v = l.get<std::vector<std::size_t>>();
          if (v.size() != 5) throw ConfigError("decoder_spec entries are [filters, kh, kw, sh, sw]");
          c.decoder_spec.push_back({v[0], {v[1], v[2]}, {v[3], v[4]}});
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("network config: ") + e.what());
    }
    c.validate();
    return c;
  }

  std::uint64_t fingerprint() const { return fnv1a64(architecture_json().dump()); }
};

}  // namespace avse::model
