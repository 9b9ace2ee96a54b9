#pragma once

#include <string>
#include <vector>

#include "avse/data/dataset.hpp"

namespace avse::data {

// "AVSEDS01" | u32 version | u64 count | per sample:
//   u8 noise kind | u32 clip | u32 segment | f32 video[5·128·128] |
//   f64 noisy[80·20] | f64 clean[80·20] | f64 phase[321·20]   (matrices column-major)
inline constexpr std::uint32_t kDatasetVersion = 1;

inline void save_dataset(const std::string& path, const std::vector<MixtureSample>& samples) {
  io::BinaryWriter out(path);
  out.magic("AVSEDS01");
  out.put<std::uint32_t>(kDatasetVersion);
  out.put<std::uint64_t>(samples.size());
  for (const auto& s : samples) {
    out.put<std::uint8_t>(static_cast<std::uint8_t>(s.noise_kind));
    out.put<std::uint32_t>(s.clip_index);
    out.put<std::uint32_t>(s.segment_index);
    out.array<float>(s.video.frames.span());
    out.array<double>({s.noisy.values().data(), static_cast<std::size_t>(s.noisy.values().size())});
    out.array<double>({s.clean_target.values().data(), static_cast<std::size_t>(s.clean_target.values().size())});
    out.array<double>({s.noisy_phase.data(), static_cast<std::size_t>(s.noisy_phase.size())});
  }
  out.close();
}

inline std::vector<MixtureSample> load_dataset(const std::string& path) {
  io::BinaryReader in(path);
  in.expect_magic("AVSEDS01");
  const auto version = in.get<std::uint32_t>();
  if (version != kDatasetVersion) throw DataError(path + ": dataset version " + std::to_string(version));
  const auto count = in.get<std::uint64_t>();
  if (count > 10'000'000) throw DataError(path + ": implausible sample count");
  std::vector<MixtureSample> out(count);
  for (auto& s : out) {
    const auto kind = in.get<std::uint8_t>();
    if (kind > 2) throw DataError(path + ": bad noise kind");
    s.noise_kind = static_cast<NoiseKind>(kind);
    s.clip_index = in.get<std::uint32_t>();
    s.segment_index = in.get<std::uint32_t>();
    in.array<float>(s.video.frames.span());
    in.array<double>({s.noisy.values().data(), static_cast<std::size_t>(s.noisy.values().size())});
    in.array<double>({s.clean_target.values().data(), static_cast<std::size_t>(s.clean_target.values().size())});
    s.noisy_phase.resize(dsp::kBins, dsp::kSegmentFrames);
    in.array<double>({s.noisy_phase.data(), static_cast<std::size_t>(s.noisy_phase.size())});
  }
  return out;
}

}  // namespace avse::data
