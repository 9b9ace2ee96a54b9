#pragma once

#include <string>
#include <vector>

#include "avse/data/dataset.hpp"
#include "test_util.hpp"

namespace avse::test {

inline data::FrameStack random_frames(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  data::FrameStack f;
  f.count = static_cast<std::uint32_t>(count);
  f.height = f.width = 128;
  f.pixels.resize(count * 128 * 128);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(uniform_index(rng, 256));
  return f;
}

// Random audio and frames covering the same timeline.
inline data::Clip random_clip(const std::string& speaker, const std::string& id, std::size_t frames,
                              std::uint64_t seed) {
  return {speaker, id, random_waveform(frames * data::kSamplesPerFrame, seed), random_frames(frames, seed + 1)};
}

}  // namespace avse::test

namespace avse::test {

// Random, already-aligned samples for optimiser tests.
inline std::vector<data::MixtureSample> toy_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<data::MixtureSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = out[i];
    for (auto& v : s.video.frames.span()) v = static_cast<float>(normal(rng));
    for (Eigen::Index c = 0; c < 20; ++c)
      for (Eigen::Index r = 0; r < 80; ++r) {
        s.clean_target.values()(r, c) = std::sin(0.1 * r + 0.3 * c + static_cast<double>(i)) - 2.0;
        s.noisy.values()(r, c) = s.clean_target.values()(r, c) + 0.5 * normal(rng);
      }
    s.noisy_phase = Eigen::MatrixXd::Zero(dsp::kBins, 20);
    s.clip_index = static_cast<std::uint32_t>(i);
  }
  return out;
}

}  // namespace avse::test
