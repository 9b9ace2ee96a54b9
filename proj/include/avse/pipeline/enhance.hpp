#pragma once

#include <functional>

#include "avse/data/dataset.hpp"
#include "avse/dsp/segment.hpp"
#include "avse/dsp/stft.hpp"

namespace avse::pipeline {

struct EnhanceResult {
  dsp::Waveform audio;
  std::size_t segments = 0;
  double dropped_seconds = 0.0;  // input beyond the last whole segment
};

// Maps one noisy segment (plus its video, if any) to an enhanced segment.
using SegmentEnhancer = std::function<dsp::LogMelSegment(const model::VideoSegment*, const dsp::LogMelSegment&)>;

// Magnitudes from the enhanced log-mel, phase from the noisy input.
inline dsp::Waveform reconstruct(const dsp::Spectrogram& noisy, const Eigen::MatrixXd& enhanced_log_mel) {
  const Eigen::Index cols = enhanced_log_mel.cols();
  if (cols > noisy.frames()) throw DataError("reconstruct: more enhanced frames than noisy frames");
  dsp::Spectrogram s;
  s.magnitude = dsp::from_log_mel(enhanced_log_mel, dsp::default_filterbank());
  s.phase = noisy.phase.leftCols(cols);
  return dsp::invert_stft(s);
}

// Segments the input, enhances each 200 ms block independently, concatenates
// the log-mel output and resynthesises with the noisy phase. The output spans
// (20·S − 1)·160 samples for S segments. When frames are given they bound the
// segment count; they are passed to the enhancer only if `with_video`.
inline EnhanceResult enhance(const SegmentEnhancer& enhancer, const data::FrameStack* frames,
                             const data::NormalizationStats* stats, const dsp::Waveform& noisy,
                             bool with_video = true) {
  dsp::check_waveform(noisy, "noisy input");
  if (noisy.size() < static_cast<std::size_t>(dsp::kWindow))
    throw DataError("input too short: " + std::to_string(noisy.size()) + " samples");
  const auto spec = dsp::compute_stft(noisy);
  const Eigen::MatrixXd mel = dsp::to_log_mel(spec, dsp::default_filterbank());
  const std::size_t audio_segments = static_cast<std::size_t>(spec.frames()) / dsp::kSegmentFrames;
  const std::size_t count = frames ? data::aligned_segment_count(frames->count, static_cast<std::size_t>(spec.frames()))
                                   : audio_segments;
  if (count == 0)
    throw DataError("input too short: need at least one 200 ms segment (5 frames, 3200 aligned samples)");

  Eigen::MatrixXd out(dsp::kMelBins, static_cast<Eigen::Index>(count) * dsp::kSegmentFrames);
  for (std::size_t k = 0; k < count; ++k) {
    const auto col = static_cast<Eigen::Index>(k) * dsp::kSegmentFrames;
    const dsp::LogMelSegment seg(Eigen::MatrixXd(mel.middleCols(col, dsp::kSegmentFrames)));
    std::optional<model::VideoSegment> video;
    if (frames && with_video) video = data::normalize_video(*frames, k * model::kVideoFrames, *stats);
    out.middleCols(col, dsp::kSegmentFrames) = enhancer(video ? &*video : nullptr, seg).values();
  }
  EnhanceResult r;
  r.audio = reconstruct(spec, out);
  r.segments = count;
  r.dropped_seconds =
      std::max(0.0, noisy.duration_seconds() - static_cast<double>(count * data::kSegmentSamples) / dsp::kSampleRate);
  return r;
}

// Runs the network in inference mode, one segment at a time.
inline EnhanceResult enhance(model::Network<float>& net, const data::NormalizationStats* stats,
                             const data::FrameStack* frames, const dsp::Waveform& noisy) {
  if (net.has_video_tower() && (frames == nullptr || stats == nullptr))
    throw ConfigError("audio-visual model requires video frames and normalisation statistics");
  return enhance([&](const model::VideoSegment* v, const dsp::LogMelSegment& a) {
    return model::forward(net, v, a, nn::Mode::infer);
  }, frames, stats, noisy, net.has_video_tower());
}

// Pipeline with the network replaced by the identity.
inline EnhanceResult enhance_identity(const dsp::Waveform& noisy, const data::FrameStack* frames = nullptr) {
  return enhance([](const model::VideoSegment*, const dsp::LogMelSegment& a) { return a; }, frames, nullptr, noisy,
                 false);
}

}  // namespace avse::pipeline
