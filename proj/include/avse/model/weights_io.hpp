#pragma once

#include <string>
#include <vector>

#include "avse/core/binary_io.hpp"
#include "avse/model/network.hpp"

namespace avse::model {

// Weight file layout (little-endian):
//   "AVSEWGT1" | u32 version | u64 config fingerprint | u32 len + config JSON |
//   u32 tensor count | per tensor: u32 len + name, u32 rank, u64 dims[rank], f32 data
inline constexpr std::string_view kWeightsMagic = "AVSEWGT1";
inline constexpr std::uint32_t kWeightsVersion = 1;

struct NamedTensor {
  std::string name;
  nn::Tensor<float> tensor;
};

struct WeightsHeader {
  std::uint32_t version = 0;
  std::uint64_t fingerprint = 0;
  NetworkConfig config;
};

inline void write_state(io::BinaryWriter& out, Network<float>& net) {
  const auto state = net.named_state();
  out.put<std::uint32_t>(static_cast<std::uint32_t>(state.size()));
  for (const auto& [name, t] : state) {
    out.string(name);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(t->rank()));
    for (auto d : t->shape()) out.put<std::uint64_t>(d);
    out.array<float>(t->span());
  }
}

inline std::vector<NamedTensor> read_state(io::BinaryReader& in) {
  const auto count = in.get<std::uint32_t>();
  if (count > 100000) throw DataError(in.path() + ": implausible tensor count");
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = in.string(4096);
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw DataError(in.path() + ": implausible tensor rank for " + nt.name);
    nn::Shape shape(rank);
    for (auto& d : shape) d = in.get<std::uint64_t>();
    if (nn::numel(shape) > (std::size_t{1} << 31)) throw DataError(in.path() + ": implausible tensor size");
    nt.tensor = nn::Tensor<float>(shape);
    in.array<float>(nt.tensor.span());
    out.push_back(std::move(nt));
  }
  return out;
}

// All-or-nothing: every name and shape is validated before anything is copied.
inline void assign_state(Network<float>& net, const std::vector<NamedTensor>& state, const std::string& source) {
  auto targets = net.named_state();
  if (targets.size() != state.size())
    throw DataError(source + ": tensor count " + std::to_string(state.size()) + " does not match network (" +
                    std::to_string(targets.size()) + ")");
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (targets[i].first != state[i].name || targets[i].second->shape() != state[i].tensor.shape())
      throw DataError(source + ": tensor " + state[i].name + " " + nn::to_string(state[i].tensor.shape()) +
                      " does not match " + targets[i].first + " " + nn::to_string(targets[i].second->shape()));
    if (!state[i].tensor.all_finite()) throw NumericError(source + ": non-finite values in " + state[i].name);
  }
  for (std::size_t i = 0; i < state.size(); ++i) *targets[i].second = state[i].tensor;
}

inline void write_weights_header(io::BinaryWriter& out, const NetworkConfig& cfg) {
  out.magic(kWeightsMagic);
  out.put<std::uint32_t>(kWeightsVersion);
  out.put<std::uint64_t>(cfg.fingerprint());
  out.string(cfg.to_json().dump());
}

inline WeightsHeader read_weights_header(io::BinaryReader& in) {
  in.expect_magic(kWeightsMagic);
  WeightsHeader h;
  h.version = in.get<std::uint32_t>();
  if (h.version != kWeightsVersion)
    throw DataError(in.path() + ": weight format version " + std::to_string(h.version) + ", expected " +
                    std::to_string(kWeightsVersion));
  h.fingerprint = in.get<std::uint64_t>();
  const auto text = in.string();
  try {
    h.config = NetworkConfig::from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(in.path() + ": unreadable embedded config: " + e.what());
  }
  if (h.config.fingerprint() != h.fingerprint) throw DataError(in.path() + ": embedded config fails its fingerprint");
  return h;
}

inline void save_weights(Network<float>& net, const std::string& path) {
  io::BinaryWriter out(path);
  write_weights_header(out, net.config());
  write_state(out, net);
  out.close();
}

// Loads weights into a network built from `cfg`; the file's fingerprint must
// match the architecture described by `cfg`.
inline Network<float> load_weights(const std::string& path, const NetworkConfig& cfg) {
  io::BinaryReader in(path);
  const auto header = read_weights_header(in);
  if (header.fingerprint != cfg.fingerprint())
    throw DataError(path + ": architecture fingerprint " + hex64(header.fingerprint) +
                    " does not match the requested configuration " + hex64(cfg.fingerprint()) + " (" +
                    to_string(header.config.mode) + " weights vs " + to_string(cfg.mode) + " config)");
  const auto state = read_state(in);
  Network<float> net(cfg);
  assign_state(net, state, path);
  return net;
}

// Loads using the configuration embedded in the file.
inline Network<float> load_weights(const std::string& path) {
  NetworkConfig cfg;
  {
    io::BinaryReader in(path);
    cfg = read_weights_header(in).config;
  }
  return load_weights(path, cfg);
}

}  // namespace avse::model
