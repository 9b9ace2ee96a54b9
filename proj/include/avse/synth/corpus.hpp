#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "avse/core/random.hpp"
#include "avse/data/manifest.hpp"
#include "avse/dsp/mel.hpp"
#include "avse/dsp/stft.hpp"
#include "avse/dsp/wav.hpp"

// Synthetic talking-head corpus. Speech is harmonic, vowel-like and
// speaker-specific; each video frame renders the clean target's log-mel
// envelope over its 40 ms as horizontal bands.
namespace avse::synth {

struct Voice {
  double f0 = 120.0;           // Hz
  double f0_spread = 0.15;     // relative
  double formant_scale = 1.0;  // vocal-tract length proxy
  std::vector<std::array<double, 3>> vowels;
};

inline constexpr std::array<std::array<double, 3>, 8> kVowels{{{730, 1090, 2440},
                                                                {270, 2290, 3010},
                                                                {300, 870, 2240},
                                                                {530, 1840, 2480},
                                                                {660, 1720, 2410},
                                                                {570, 840, 2410},
                                                                {440, 1020, 2240},
                                                                {490, 1350, 1690}}};

inline Voice make_voice(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x701CE));
  Voice v;
  v.f0 = uniform(rng, 90.0, 260.0);
  v.f0_spread = uniform(rng, 0.08, 0.2);
  v.formant_scale = uniform(rng, 0.85, 1.2);
  std::vector<std::size_t> idx(kVowels.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < 4; ++i) v.vowels.push_back(kVowels[idx[i]]);
  return v;
}

inline double formant_gain(double hz, const std::array<double, 3>& f, double scale) {
  double g = 0.0;
  const std::array<double, 3> amp{1.0, 0.6, 0.3};
  for (std::size_t i = 0; i < 3; ++i) {
    const double c = f[i] * scale, bw = 60.0 + 0.06 * c;
    g += amp[i] * std::exp(-0.5 * (hz - c) * (hz - c) / (bw * bw));
  }
  return g + 0.01;
}

inline constexpr double kPauseProbability = 0.4;

// Syllables of 100–300 ms with pauses of the same length between some of
// them, normalised to RMS 0.1.
inline dsp::Waveform utterance(const Voice& v, std::size_t samples, Rng& rng) {
  dsp::Waveform w;
  w.samples.assign(samples, 0.0);
  const double sr = dsp::kSampleRate;
  std::size_t pos = 0;
  while (pos < samples) {
    const auto len = static_cast<std::size_t>(uniform(rng, 0.1, 0.3) * sr);
    const std::size_t end = std::min(samples, pos + len);
    if (uniform01(rng) < kPauseProbability) {
      pos = end;
      continue;
    }
    const auto& vowel = v.vowels[uniform_index(rng, v.vowels.size())];
    const double f_start = v.f0 * (1.0 + v.f0_spread * uniform(rng, -1.0, 1.0));
    const double f_end = v.f0 * (1.0 + v.f0_spread * uniform(rng, -1.0, 1.0));
    const double loud = uniform(rng, 0.5, 1.0);
    const std::size_t n = end - pos;
    const double ramp = 0.015 * sr;
    double phase = uniform(rng, 0.0, 2.0 * M_PI);
    const int harmonics = static_cast<int>(7600.0 / std::max(f_start, f_end));
    std::vector<double> gains(harmonics);
    for (int h = 1; h <= harmonics; ++h)
      gains[h - 1] = formant_gain(h * 0.5 * (f_start + f_end), vowel, v.formant_scale) / std::sqrt(h);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      const double f0 = f_start + (f_end - f_start) * t;
      phase += 2.0 * M_PI * f0 / sr;
      double env = loud;
      if (i < ramp) env *= static_cast<double>(i) / ramp;
      if (n - i < ramp) env *= static_cast<double>(n - i) / ramp;
      double s = 0.0;
      for (int h = 1; h <= harmonics; ++h) s += gains[h - 1] * std::sin(h * phase);
      w.samples[pos + i] = env * s;
    }
    pos = end;
  }
  for (auto& s : w.samples) s += 1e-3 * normal(rng);
  const double rms = std::sqrt(dsp::mean_power(w.samples));
  for (auto& s : w.samples) s *= 0.1 / rms;
  return w;
}

// Spectrally tilted noise with a slow amplitude modulation.
inline dsp::Waveform ambient_noise(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  const double tilt = uniform(rng, 0.0, 0.97);
  const double mod_hz = uniform(rng, 0.3, 3.0);
  dsp::Waveform w;
  w.samples.resize(samples);
  double prev = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    prev = tilt * prev + normal(rng);
    w.samples[i] = prev * (1.0 + 0.5 * std::sin(2.0 * M_PI * mod_hz * static_cast<double>(i) / dsp::kSampleRate));
  }
  const double rms = std::sqrt(dsp::mean_power(w.samples));
  for (auto& s : w.samples) s *= 0.1 / rms;
  return w;
}

inline constexpr double kVideoLogMelLow = -9.0;
inline constexpr double kVideoLogMelHigh = 3.0;

inline constexpr double kEnvelopeSigmaBands = 3.0;

// Gaussian smoothing across mel bands; removes resolved harmonics and keeps
// the formant envelope.
inline Eigen::VectorXd spectral_envelope(const Eigen::VectorXd& level) {
  const int radius = static_cast<int>(std::ceil(3.0 * kEnvelopeSigmaBands));
  Eigen::VectorXd out(level.size());
  for (Eigen::Index b = 0; b < level.size(); ++b) {
    double sum = 0.0, wsum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
      const Eigen::Index j = b + d;
      if (j < 0 || j >= level.size()) continue;
      const double w = std::exp(-0.5 * d * d / (kEnvelopeSigmaBands * kEnvelopeSigmaBands));
      sum += w * level(j);
      wsum += w;
    }
    out(b) = sum / wsum;
  }
  return out;
}

// Frame k shows the spectral envelope of the mean log-mel of STFT columns
// [4k, 4k+4): mel band b fills rows [b·128/80, (b+1)·128/80) with brightness
// proportional to its level.
inline data::FrameStack render_frames(const dsp::Waveform& clean) {
  const Eigen::MatrixXd mel = dsp::to_log_mel(dsp::compute_stft(clean), dsp::default_filterbank());
  data::FrameStack f;
  f.count = static_cast<std::uint32_t>(clean.size() / data::kSamplesPerFrame);
  f.height = f.width = 128;
  f.pixels.resize(static_cast<std::size_t>(f.count) * 128 * 128);
  constexpr int kCols = data::kSamplesPerFrame / dsp::kHop;
  for (std::size_t k = 0; k < f.count; ++k) {
    const Eigen::VectorXd level =
        spectral_envelope(mel.middleCols(static_cast<Eigen::Index>(k * kCols), kCols).rowwise().mean());
    std::uint8_t* frame = f.pixels.data() + k * 128 * 128;
    for (int y = 0; y < 128; ++y) {
      const double v = level(y * dsp::kMelBins / 128);
      const double u = std::clamp((v - kVideoLogMelLow) / (kVideoLogMelHigh - kVideoLogMelLow), 0.0, 1.0);
      std::fill(frame + y * 128, frame + (y + 1) * 128, static_cast<std::uint8_t>(std::lround(255.0 * u)));
    }
  }
  return f;
}

struct CorpusOptions {
  std::size_t speakers = 4;
  std::size_t train_clips = 6;  // per speaker
  std::size_t test_clips = 2;   // per speaker
  std::size_t frames = 50;      // per clip (2 s)
  std::size_t noise_talkers = 3;
  std::size_t ambient_files = 3;
  std::uint64_t seed = 1;
};

inline data::Clip make_clip(const Voice& v, const std::string& speaker, const std::string& id, std::size_t frames,
                            std::uint64_t seed) {
  Rng rng(seed);
  data::Clip c;
  c.speaker_id = speaker;
  c.clip_id = id;
  c.audio = utterance(v, frames * data::kSamplesPerFrame, rng);
  c.frames = render_frames(c.audio);
  return c;
}

struct Corpus {
  std::vector<data::Clip> train, test;
  std::vector<dsp::Waveform> noise_speech, noise_ambient;
};

// Target speakers use voice streams [0, speakers); interfering talkers are
// disjoint voices.
inline Corpus make_corpus(const CorpusOptions& o) {
  Corpus c;
  for (std::size_t s = 0; s < o.speakers; ++s) {
    const auto voice = make_voice(derive_seed(o.seed, s));
    const std::string spk = "spk" + std::to_string(s);
    for (std::size_t i = 0; i < o.train_clips + o.test_clips; ++i) {
      const std::string id = spk + "_u" + std::to_string(i);
      auto clip = make_clip(voice, spk, id, o.frames, derive_seed(derive_seed(o.seed, 1000 + s), i));
      (i < o.train_clips ? c.train : c.test).push_back(std::move(clip));
    }
  }
  const std::size_t noise_len = (o.frames + 25) * data::kSamplesPerFrame;
  for (std::size_t t = 0; t < o.noise_talkers; ++t) {
    const auto voice = make_voice(derive_seed(o.seed, 5000 + t));
    Rng rng(derive_seed(o.seed, 6000 + t));
    c.noise_speech.push_back(utterance(voice, noise_len, rng));
  }
  for (std::size_t a = 0; a < o.ambient_files; ++a) c.noise_ambient.push_back(ambient_noise(noise_len, derive_seed(o.seed, 7000 + a)));
  return c;
}

// Writes clips/, noise/{speech,ambient}/, manifest.json and test_manifest.json.
inline void write_corpus(const Corpus& c, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "clips");
  fs::create_directories(fs::path(dir) / "noise" / "speech");
  fs::create_directories(fs::path(dir) / "noise" / "ambient");
  auto write_manifest = [&](const std::vector<data::Clip>& clips, const std::string& name) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& clip : clips) {
      const std::string wav = "clips/" + clip.clip_id + ".wav", frames = "clips/" + clip.clip_id + ".lvf";
      dsp::write_wav((fs::path(dir) / wav).string(), clip.audio);
      data::write_frames((fs::path(dir) / frames).string(), clip.frames);
      j.push_back({{"speaker_id", clip.speaker_id},
                   {"clip_id", clip.clip_id},
                   {"wav", wav},
                   {"frames", frames},
                   {"frame_count", clip.frames.count}});
    }
    std::ofstream(fs::path(dir) / name) << j.dump(2) << '\n';
  };
  write_manifest(c.train, "manifest.json");
  write_manifest(c.test, "test_manifest.json");
  char name[32];
  for (std::size_t i = 0; i < c.noise_speech.size(); ++i) {
    std::snprintf(name, sizeof name, "talker%02zu.wav", i);
    dsp::write_wav((fs::path(dir) / "noise" / "speech" / name).string(), c.noise_speech[i]);
  }
  for (std::size_t i = 0; i < c.noise_ambient.size(); ++i) {
    std::snprintf(name, sizeof name, "ambient%02zu.wav", i);
    dsp::write_wav((fs::path(dir) / "noise" / "ambient" / name).string(), c.noise_ambient[i]);
  }
}

}  // namespace avse::synth
