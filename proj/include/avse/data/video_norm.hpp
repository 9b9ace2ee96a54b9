#pragma once

#include <cmath>
#include <vector>

#include "avse/core/binary_io.hpp"
#include "avse/data/manifest.hpp"
#include "avse/model/network.hpp"

namespace avse::data {

inline constexpr double kMinVideoStd = 1e-6;

// Mean frame and scalar pixel deviation, computed on training data only.
struct NormalizationStats {
  std::vector<double> mean_frame = std::vector<double>(model::kFrameSize * model::kFrameSize, 0.0);
  double std_scalar = 1.0;
};

inline NormalizationStats compute_video_norm(const std::vector<const FrameStack*>& stacks) {
  const std::size_t px = model::kFrameSize * model::kFrameSize;
  NormalizationStats s;
  std::size_t frames = 0;
  for (const auto* st : stacks) {
    if (st->frame_size() != px) throw DataError("compute_video_norm: frames must be 128x128");
    for (std::size_t f = 0; f < st->count; ++f) {
      const auto* p = st->frame(f);
      for (std::size_t i = 0; i < px; ++i) s.mean_frame[i] += p[i];
    }
    frames += st->count;
  }
  if (frames == 0) throw DataError("compute_video_norm: no frames");
  for (auto& v : s.mean_frame) v /= static_cast<double>(frames);
  double sq = 0.0;
  for (const auto* st : stacks)
    for (std::size_t f = 0; f < st->count; ++f) {
      const auto* p = st->frame(f);
      for (std::size_t i = 0; i < px; ++i) {
        const double d = p[i] - s.mean_frame[i];
        sq += d * d;
      }
    }
  s.std_scalar = std::sqrt(sq / static_cast<double>(frames * px));
  if (s.std_scalar < kMinVideoStd)
    throw DataError("compute_video_norm: degenerate pixel deviation " + std::to_string(s.std_scalar) +
                    " (constant video data)");
  return s;
}

inline NormalizationStats compute_video_norm(const std::vector<Clip>& train_clips) {
  std::vector<const FrameStack*> stacks;
  for (const auto& c : train_clips) stacks.push_back(&c.frames);
  return compute_video_norm(stacks);
}

// (frame - mean_frame) / std for frames [first, first + 5).
inline model::VideoSegment normalize_video(const FrameStack& stack, std::size_t first, const NormalizationStats& stats) {
  if (stats.std_scalar < kMinVideoStd) throw DataError("normalize_video: degenerate normalisation statistics");
  if (first + model::kVideoFrames > stack.count) throw DataError("normalize_video: segment exceeds frame stack");
  const std::size_t px = model::kFrameSize * model::kFrameSize;
  if (stack.frame_size() != px) throw DataError("normalize_video: frames must be 128x128");
  model::VideoSegment seg;
  const double inv = 1.0 / stats.std_scalar;
  for (std::size_t f = 0; f < model::kVideoFrames; ++f) {
    const auto* p = stack.frame(first + f);
    float* dst = seg.frames.data() + f * px;
    for (std::size_t i = 0; i < px; ++i) dst[i] = static_cast<float>((p[i] - stats.mean_frame[i]) * inv);
  }
  return seg;
}

// "AVSENRM1" | 128·128 f64 mean frame | f64 std.
inline void save_norm_stats(const std::string& path, const NormalizationStats& s) {
  io::BinaryWriter out(path);
  out.magic("AVSENRM1");
  out.array<double>(s.mean_frame);
  out.put<double>(s.std_scalar);
  out.close();
}

inline NormalizationStats load_norm_stats(const std::string& path) {
  io::BinaryReader in(path);
  in.expect_magic("AVSENRM1");
  NormalizationStats s;
  in.array<double>(s.mean_frame);
  s.std_scalar = in.get<double>();
  if (!(s.std_scalar >= kMinVideoStd)) throw DataError(path + ": degenerate normalisation statistics");
  return s;
}

}  // namespace avse::data
