#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "avse/core/random.hpp"
#include "avse/data/manifest.hpp"

namespace avse::data {

enum class NoiseKind : std::uint8_t { speech_other = 0, ambient = 1, speech_self = 2 };

inline constexpr NoiseKind kAllNoiseKinds[] = {NoiseKind::speech_other, NoiseKind::ambient, NoiseKind::speech_self};

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::speech_other: return "speech_other";
    case NoiseKind::ambient: return "ambient";
    case NoiseKind::speech_self: return "speech_self";
  }
  return "unknown";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  for (auto k : kAllNoiseKinds)
    if (to_string(k) == s) return k;
  throw ConfigError("unknown noise kind '" + s + "'");
}

struct Mixture {
  dsp::Waveform mixture;
  dsp::Waveform scaled_noise;  // α·noise over the speech span
  double alpha = 0.0;
  std::size_t noise_offset = 0;
};

// speech + α·noise[offset, offset+len), α chosen so that
// 10·log10(P_speech / P_{α·noise}) = snr_db over the speech span.
inline Mixture mix_at_snr(const dsp::Waveform& speech, const dsp::Waveform& noise, double snr_db, Rng& rng) {
  if (noise.size() < speech.size())
    throw DataError("mix_at_snr: noise (" + std::to_string(noise.size()) + " samples) shorter than speech (" +
                    std::to_string(speech.size()) + ")");
  const std::size_t n = speech.size();
  Mixture m;
  m.noise_offset = uniform_index(rng, noise.size() - n + 1);
  std::vector<double> cropped(noise.samples.begin() + static_cast<std::ptrdiff_t>(m.noise_offset),
                              noise.samples.begin() + static_cast<std::ptrdiff_t>(m.noise_offset + n));
  const double p_speech = dsp::mean_power(speech.samples);
  const double p_noise = dsp::mean_power(cropped);
  if (!(p_noise > 0.0)) throw DataError("mix_at_snr: noise is silent over the mixing span");
  m.alpha = std::sqrt(p_speech / (p_noise * std::pow(10.0, snr_db / 10.0)));
  m.mixture.samples.resize(n);
  m.scaled_noise.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.scaled_noise.samples[i] = m.alpha * cropped[i];
    m.mixture.samples[i] = speech.samples[i] + m.scaled_noise.samples[i];
  }
  return m;
}

// Repeats `w` cyclically until it holds at least `length` samples.
inline dsp::Waveform tile_to_length(const dsp::Waveform& w, std::size_t length) {
  if (w.size() >= length) return w;
  if (w.samples.empty()) throw DataError("cannot tile an empty waveform");
  dsp::Waveform out;
  out.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) out.samples[i] = w.samples[i % w.size()];
  return out;
}

struct SelfMixture {
  std::size_t target = 0;      // index into the speaker's clips
  std::size_t interferer = 0;  // a different clip of the same speaker
  dsp::Waveform clean;
  Mixture mix;
};

// Two distinct utterances of the same speaker, one as target and the other as
// background, mixed at `snr_db` (0 dB by default).
inline SelfMixture make_self_mixture(const std::vector<const dsp::Waveform*>& speaker_clips, Rng& rng,
                                     double snr_db = 0.0) {
  if (speaker_clips.size() < 2)
    throw DataError("self-mixture needs at least 2 clips of the speaker, got " + std::to_string(speaker_clips.size()));
  SelfMixture s;
  s.target = uniform_index(rng, speaker_clips.size());
  s.interferer = uniform_index(rng, speaker_clips.size() - 1);
  if (s.interferer >= s.target) ++s.interferer;
  s.clean = *speaker_clips[s.target];
  const auto noise = tile_to_length(*speaker_clips[s.interferer], s.clean.size());
  s.mix = mix_at_snr(s.clean, noise, snr_db, rng);
  return s;
}

}  // namespace avse::data
