#include <gtest/gtest.h>

#include "avse/metrics/report.hpp"
#include "data_util.hpp"

using namespace avse;
using namespace avse::metrics;

namespace {

dsp::Waveform scaled(const dsp::Waveform& w, double a) {
  dsp::Waveform o = w;
  for (auto& v : o.samples) v *= a;
  return o;
}

}  // namespace

TEST(Snr, IdentityIsCapped) {
  const auto c = test::random_waveform(4000, 1);
  EXPECT_EQ(snr_db(c, c), kSnrCapDb);
}

TEST(Snr, EqualEnergyResidualIsZero) {
  const auto c = test::random_waveform(4000, 1);
  auto e = test::random_waveform(4000, 2);
  e = scaled(e, std::sqrt(dsp::mean_power(c.samples) / dsp::mean_power(e.samples)));
  dsp::Waveform est = c;
  for (std::size_t i = 0; i < c.size(); ++i) est.samples[i] += e.samples[i];
  EXPECT_NEAR(snr_db(c, est), 0.0, 1e-9);
}

TEST(Snr, ZerosEstimateIsZeroDb) {
  const auto c = test::random_waveform(4000, 3);
  dsp::Waveform z;
  z.samples.assign(4000, 0.0);
  EXPECT_NEAR(snr_db(c, z), 0.0, 1e-12);
}

TEST(Snr, MatchesOracleAndDecreasesWithNoise) {
  const auto c = test::random_waveform(4000, 4);
  const auto e = test::random_waveform(4000, 5);
  double prev = 1e9;
  for (double a : {0.01, 0.1, 0.5, 1.0, 3.0}) {
    dsp::Waveform est = c;
    for (std::size_t i = 0; i < c.size(); ++i) est.samples[i] += a * e.samples[i];
    const double s = snr_db(c, est);
    EXPECT_NEAR(s, test::snr_db_oracle(c.samples, est.samples), 1e-9);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Snr, LengthMismatchWarnsAndAdjusts) {
  const auto c = test::random_waveform(1000, 6);
  std::vector<std::string> warnings;
  log::ScopedSink sink([&](const std::string& m) { warnings.push_back(m); });
  dsp::Waveform longer = c;
  longer.samples.resize(1200, 5.0);
  EXPECT_EQ(snr_db(c, longer), kSnrCapDb);
  dsp::Waveform shorter = c;
  shorter.samples.resize(500);
  std::vector<double> padded(c.samples.begin(), c.samples.begin() + 500);
  padded.resize(1000, 0.0);
  EXPECT_NEAR(snr_db(c, shorter), test::snr_db_oracle(c.samples, padded), 1e-12);
  EXPECT_EQ(warnings.size(), 2u);
}

TEST(Snr, SilentCleanErrors) {
  dsp::Waveform z;
  z.samples.assign(100, 0.0);
  EXPECT_THROW(snr_db(z, test::random_waveform(100, 1)), DataError);
}

TEST(Lsd, IdentityZeroDoublingAndSymmetry) {
  const auto a = test::random_waveform(8000, 7);
  const auto b = test::random_waveform(8000, 8);
  EXPECT_EQ(log_spectral_distance(a, a), 0.0);
  EXPECT_NEAR(log_spectral_distance(a, scaled(a, 2.0)), 20.0 * std::log10(2.0), 1e-6);
  EXPECT_NEAR(log_spectral_distance(a, scaled(a, 2.0)), 6.0206, 1e-4);
  EXPECT_EQ(log_spectral_distance(a, b), log_spectral_distance(b, a));
  EXPECT_GT(log_spectral_distance(a, b), 0.0);
}

TEST(Lsd, MatchesDirectFormula) {
  const auto a = test::random_waveform(3200, 9);
  const auto b = test::random_waveform(3200, 10);
  const auto sa = dsp::compute_stft(a).magnitude, sb = dsp::compute_stft(b).magnitude;
  double total = 0.0;
  for (Eigen::Index t = 0; t < sa.cols(); ++t) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < sa.rows(); ++k) {
      const double d = 20.0 * std::log10(sa(k, t) + 1e-8) - 20.0 * std::log10(sb(k, t) + 1e-8);
      acc += d * d;
    }
    total += std::sqrt(acc / static_cast<double>(sa.rows()));
  }
  EXPECT_NEAR(log_spectral_distance(a, b), total / static_cast<double>(sa.cols()), 1e-9);
}

TEST(Lsd, TooShortErrors) {
  EXPECT_THROW(log_spectral_distance(test::random_waveform(639, 1), test::random_waveform(639, 2)), DataError);
}

namespace {

std::vector<data::Clip> eval_clips() {
  std::vector<data::Clip> clips;
  for (int s = 0; s < 3; ++s)
    for (int c = 0; c < 2; ++c)
      clips.push_back(test::random_clip("s" + std::to_string(s), "c" + std::to_string(c), 15, 40 + 2 * s + c));
  return clips;
}

data::NoiseSources eval_noise() {
  return {{test::random_waveform(12000, 70)}, {test::random_waveform(12000, 71)}};
}

}  // namespace

TEST(Evaluate, NoisyRowNearZeroDbAndCountsSum) {
  const auto clips = eval_clips();
  const auto plan = data::plan_mixtures(clips, eval_noise(), {1.0 / 3.0, 0.0, 8});
  const auto r = evaluate(nullptr, nullptr, clips, plan);
  ASSERT_EQ(r.samples.size(), clips.size());
  std::size_t total = 0;
  for (const auto& [k, g] : r.noisy) total += g.count;
  EXPECT_EQ(total, clips.size());
  EXPECT_NEAR(r.noisy_all.snr, 0.0, 0.5);
  EXPECT_TRUE(r.enhanced.empty());
  for (const auto& s : r.samples) EXPECT_EQ(s.samples, (20u * 3u - 1u) * 160u);
}

TEST(Evaluate, AggregationIsArithmeticMean) {
  const auto clips = eval_clips();
  const auto plan = data::plan_mixtures(clips, eval_noise(), {0.5, 0.0, 9});
  model::NetworkConfig cfg;
  cfg.width_divisor = 32;
  model::Network<float> net(cfg);
  const auto stats = data::compute_video_norm(clips);
  const auto r = evaluate(&net, &stats, clips, plan);
  std::map<data::NoiseKind, std::pair<double, int>> acc;
  for (const auto& s : r.samples) {
    acc[s.kind].first += s.snr_enhanced;
    ++acc[s.kind].second;
    EXPECT_TRUE(std::isfinite(s.snr_enhanced));
  }
  for (const auto& [k, v] : acc) EXPECT_NEAR(r.enhanced.at(k).snr, v.first / v.second, 1e-9);

  const auto j = to_json(r);
  for (auto k : data::kAllNoiseKinds) {
    if (!acc.count(k)) continue;
    double sum = 0.0;
    int n = 0;
    for (const auto& s : j["samples"])
      if (s["noise_kind"] == data::to_string(k)) {
        sum += s["enhanced"]["snr_db"].get<double>();
        ++n;
      }
    EXPECT_NEAR(j["enhanced"][data::to_string(k)]["snr_db"].get<double>(), sum / n, 1e-9);
  }
  const auto table = format_table(r, "AV");
  EXPECT_NE(table.find("Noisy"), std::string::npos);
  EXPECT_NE(table.find("AV"), std::string::npos);
  EXPECT_NE(table.find("speech_self"), std::string::npos);
}

TEST(Evaluate, EmptyTestSetErrors) {
  EXPECT_THROW(evaluate(nullptr, nullptr, {}, {}), DataError);
}

// The network-free pipeline only adds mel and noisy-phase reconstruction
// error, so its score stays finite and close to the input score.
TEST(Pipeline, IdentityEnhancerTracksInputSnr) {
  const auto clips = eval_clips();
  const auto plan = data::plan_mixtures(clips, eval_noise(), {0.0, 0.0, 10});
  for (const auto& m : plan) {
    const auto out = pipeline::enhance_identity(m.noisy, &clips[m.clip_index].frames);
    dsp::Waveform clean, noisy;
    clean.samples.assign(m.clean.samples.begin(), m.clean.samples.begin() + out.audio.size());
    noisy.samples.assign(m.noisy.samples.begin(), m.noisy.samples.begin() + out.audio.size());
    const double s_in = snr_db(clean, noisy), s_id = snr_db(clean, out.audio);
    EXPECT_TRUE(std::isfinite(s_id));
    EXPECT_NEAR(s_id, s_in, 3.0);
  }
}

TEST(Pipeline, OutputLengthAndDeterminism) {
  const auto clip = test::random_clip("s", "a", 25, 3);
  model::NetworkConfig cfg;
  cfg.width_divisor = 32;
  model::Network<float> net(cfg);
  const auto stats = data::compute_video_norm(std::vector<data::Clip>{clip});
  const auto a = pipeline::enhance(net, &stats, &clip.frames, clip.audio);
  const auto b = pipeline::enhance(net, &stats, &clip.frames, clip.audio);
  EXPECT_EQ(a.segments, 5u);
  EXPECT_EQ(a.audio.size(), 99u * 160u);
  EXPECT_NEAR(a.audio.duration_seconds(), 1.0, 0.01 + 1e-12);
  EXPECT_EQ(a.audio.samples, b.audio.samples);
  EXPECT_NEAR(a.dropped_seconds, 0.0, 1e-12);

  auto longer = clip.audio;
  longer.samples.resize(longer.size() + 1000, 0.0);
  EXPECT_NEAR(pipeline::enhance(net, &stats, &clip.frames, longer).dropped_seconds, 1000.0 / 16000.0, 1e-12);

  data::FrameStack four = clip.frames;
  four.count = 4;
  four.pixels.resize(4 * 128 * 128);
  EXPECT_THROW(pipeline::enhance(net, &stats, &four, clip.audio), DataError);
  EXPECT_THROW(pipeline::enhance(net, nullptr, &clip.frames, clip.audio), ConfigError);
}

TEST(Pipeline, IdentityWithCleanInputIsCloseToClean) {
  // Pure harmonic input: mel reconstruction with the true phase keeps most energy.
  const auto s = test::sine(16000, 440.0, 0.3);
  const auto out = pipeline::enhance_identity(s);
  dsp::Waveform ref;
  ref.samples.assign(s.samples.begin(), s.samples.begin() + out.audio.size());
  EXPECT_GT(snr_db(ref, out.audio), 0.0);
}
