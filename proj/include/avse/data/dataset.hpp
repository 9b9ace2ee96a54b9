#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "avse/data/mixing.hpp"
#include "avse/data/video_norm.hpp"
#include "avse/dsp/segment.hpp"
#include "avse/dsp/stft.hpp"

namespace avse::data {

inline constexpr std::size_t kSegmentSamples = model::kVideoFrames * kSamplesPerFrame;  // 3200
static_assert(kSegmentSamples == dsp::kSegmentFrames * dsp::kHop, "video and audio segments must span equal time");

// One aligned 200 ms training/evaluation unit.
struct MixtureSample {
  model::VideoSegment video;
  dsp::LogMelSegment noisy;
  dsp::LogMelSegment clean_target;
  Eigen::MatrixXd noisy_phase;  // 321×20
  NoiseKind noise_kind = NoiseKind::ambient;
  std::uint32_t clip_index = 0;
  std::uint32_t segment_index = 0;

  std::size_t start_sample() const { return segment_index * kSegmentSamples; }
};

inline std::size_t aligned_segment_count(std::size_t frames, std::size_t stft_frames) {
  return std::min(frames / model::kVideoFrames, stft_frames / dsp::kSegmentFrames);
}

// Pairs video frames [5k, 5k+5) with spectrogram columns [20k, 20k+20) of the
// noisy and clean signals; both start at sample 3200k.
inline std::vector<MixtureSample> align_segments(const Clip& clip, const dsp::Waveform& clean,
                                                 const dsp::Waveform& noisy, const NormalizationStats& stats,
                                                 NoiseKind kind, std::uint32_t clip_index = 0) {
  if (clip.frames.count == 0 || clean.samples.empty()) throw DataError("align_segments: empty clip " + clip.clip_id);
  if (clean.size() != noisy.size()) throw DataError("align_segments: clean/noisy length mismatch in " + clip.clip_id);
  const auto& fb = dsp::default_filterbank();
  const auto noisy_spec = dsp::compute_stft(noisy);
  const Eigen::MatrixXd noisy_mel = dsp::to_log_mel(noisy_spec, fb);
  const Eigen::MatrixXd clean_mel = dsp::to_log_mel(dsp::compute_stft(clean), fb);
  const std::size_t count = aligned_segment_count(clip.frames.count, static_cast<std::size_t>(noisy_spec.frames()));
  std::vector<MixtureSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto col = static_cast<Eigen::Index>(k * dsp::kSegmentFrames);
    MixtureSample s;
    s.video = normalize_video(clip.frames, k * model::kVideoFrames, stats);
    s.noisy = dsp::LogMelSegment(noisy_mel.middleCols(col, dsp::kSegmentFrames));
    s.clean_target = dsp::LogMelSegment(clean_mel.middleCols(col, dsp::kSegmentFrames));
    s.noisy_phase = noisy_spec.phase.middleCols(col, dsp::kSegmentFrames);
    s.noise_kind = kind;
    s.clip_index = clip_index;
    s.segment_index = static_cast<std::uint32_t>(k);
    out.push_back(std::move(s));
  }
  return out;
}

// Background signals other than the target speaker's own voice.
struct NoiseSources {
  std::vector<dsp::Waveform> speech;   // other talkers
  std::vector<dsp::Waveform> ambient;  // non-speech noise
};

// noise_dir/speech/*.wav and noise_dir/ambient/*.wav, sorted by file name.
inline NoiseSources load_noise_sources(const std::string& noise_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(noise_dir)) throw ConfigError("noise directory not found: " + noise_dir);
  NoiseSources ns;
  auto load = [&](const std::string& sub, std::vector<dsp::Waveform>& dst) {
    const fs::path dir = fs::path(noise_dir) / sub;
    if (!fs::is_directory(dir)) return;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) dst.push_back(dsp::read_wav(f.string()));
  };
  load("speech", ns.speech);
  load("ambient", ns.ambient);
  return ns;
}

struct MixingOptions {
  double self_fraction = 1.0 / 3.0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

// The mixture drawn for one clip.
struct ClipMixture {
  std::uint32_t clip_index = 0;
  NoiseKind kind = NoiseKind::ambient;
  std::size_t source = 0;  // clip index (self) or index into the noise pool
  dsp::Waveform clean;
  dsp::Waveform noisy;
};

// Per clip: self-mixture with probability self_fraction, otherwise other
// speech or ambient noise with equal odds. Each clip draws from its own
// stream derived from the seed, so results do not depend on iteration order.
inline std::vector<ClipMixture> plan_mixtures(const std::vector<Clip>& clips, const NoiseSources& noise,
                                              const MixingOptions& opt) {
  if (clips.empty()) throw DataError("no clips to mix");
  if (!(opt.self_fraction >= 0.0 && opt.self_fraction <= 1.0)) throw ConfigError("self_fraction must lie in [0, 1]");
  const auto speakers = group_by_speaker(clips);
  if (opt.self_fraction > 0.0)
    for (const auto& [spk, idx] : speakers)
      if (idx.size() < 2)
        throw DataError("self_fraction > 0 but speaker '" + spk + "' has only " + std::to_string(idx.size()) +
                        " clip");

  std::vector<ClipMixture> out;
  out.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    Rng rng(derive_seed(opt.seed, i));
    ClipMixture m;
    m.clip_index = static_cast<std::uint32_t>(i);
    m.clean = clips[i].audio;
    const bool self = uniform01(rng) < opt.self_fraction;
    dsp::Waveform background;
    if (self) {
      const auto& same = speakers.at(clips[i].speaker_id);
      std::vector<std::size_t> others;
      for (auto j : same)
        if (j != i) others.push_back(j);
      m.kind = NoiseKind::speech_self;
      m.source = others[uniform_index(rng, others.size())];
      background = tile_to_length(clips[m.source].audio, m.clean.size());
    } else {
      std::vector<NoiseKind> pools;
      if (!noise.speech.empty()) pools.push_back(NoiseKind::speech_other);
      if (!noise.ambient.empty()) pools.push_back(NoiseKind::ambient);
      if (pools.empty()) throw DataError("no speech or ambient noise sources available");
      m.kind = pools.size() == 2 ? pools[uniform_index(rng, 2)] : pools[0];
      const auto& pool = m.kind == NoiseKind::speech_other ? noise.speech : noise.ambient;
      m.source = uniform_index(rng, pool.size());
      background = tile_to_length(pool[m.source], m.clean.size());
    }
    m.noisy = mix_at_snr(m.clean, background, opt.snr_db, rng).mixture;
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<MixtureSample> build_dataset(const std::vector<Clip>& clips, const NoiseSources& noise,
                                                const MixingOptions& opt, const NormalizationStats& stats) {
  std::vector<MixtureSample> out;
  for (const auto& m : plan_mixtures(clips, noise, opt)) {
    auto segs = align_segments(clips[m.clip_index], m.clean, m.noisy, stats, m.kind, m.clip_index);
    std::move(segs.begin(), segs.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace avse::data
