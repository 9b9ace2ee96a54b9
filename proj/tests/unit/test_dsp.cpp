#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <fstream>

#include "avse/dsp/mel.hpp"
#include "avse/dsp/segment.hpp"
#include "avse/dsp/stft.hpp"
#include "avse/dsp/wav.hpp"
#include "test_util.hpp"

using namespace avse;
using namespace avse::dsp;

namespace {

// Plain O(N²) DFT of one Hann-windowed frame starting at `start` (no padding).
std::vector<double> dft_magnitude(const std::vector<double>& x, std::size_t start) {
  const auto w = hann_window(kWindow);
  std::vector<double> mag(kBins);
  for (int k = 0; k < kBins; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < kWindow; ++n)
      acc += x[start + n] * w[n] * std::polar(1.0, -2.0 * M_PI * k * n / kWindow);
    mag[k] = std::abs(acc);
  }
  return mag;
}

void write_raw_wav(const std::string& path, std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                   std::uint16_t bits, const std::vector<char>& payload) {
  std::ofstream f(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  f.write("RIFF", 4);
  u32(36 + static_cast<std::uint32_t>(payload.size()));
  f.write("WAVEfmt ", 8);
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  f.write("data", 4);
  u32(static_cast<std::uint32_t>(payload.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

}  // namespace

TEST(Wav, RampRoundTripWithinQuantization) {
  test::TempDir dir("wav");
  Waveform w;
  for (int i = 0; i < 3200; ++i) w.samples.push_back(-1.0 + 2.0 * i / 3199.0);
  write_wav(dir.file("ramp.wav"), w);
  const auto back = read_wav(dir.file("ramp.wav"));
  ASSERT_EQ(back.size(), w.size());
  EXPECT_EQ(back.sample_rate, 16000);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LE(std::abs(back.samples[i] - w.samples[i]), std::ldexp(1.0, -15));
}

TEST(Wav, ZerosStayZeros) {
  test::TempDir dir("wav");
  Waveform w;
  w.samples.assign(1234, 0.0);
  write_wav(dir.file("z.wav"), w);
  std::ifstream f(dir.file("z.wav"), std::ios::binary | std::ios::ate);
  EXPECT_EQ(static_cast<std::size_t>(f.tellg()), 44u + 2u * 1234u);
  const auto back = read_wav(dir.file("z.wav"));
  ASSERT_EQ(back.size(), 1234u);
  for (double v : back.samples) EXPECT_EQ(v, 0.0);
}

TEST(Wav, RejectsOtherSampleRates) {
  test::TempDir dir("wav");
  write_raw_wav(dir.file("cd.wav"), 1, 1, 44100, 16, std::vector<char>(200, 0));
  EXPECT_THROW(read_wav(dir.file("cd.wav")), DataError);
}

TEST(Wav, RejectsUnsupportedEncoding) {
  test::TempDir dir("wav");
  write_raw_wav(dir.file("u8.wav"), 1, 1, 16000, 8, std::vector<char>(200, 0));
  EXPECT_THROW(read_wav(dir.file("u8.wav")), DataError);
}

TEST(Wav, StereoFloatIsAveraged) {
  test::TempDir dir("wav");
  std::vector<float> interleaved = {0.5f, -0.25f, 1.0f, 0.0f};
  std::vector<char> payload(reinterpret_cast<char*>(interleaved.data()),
                            reinterpret_cast<char*>(interleaved.data()) + 16);
  write_raw_wav(dir.file("st.wav"), 3, 2, 16000, 32, payload);
  const auto w = read_wav(dir.file("st.wav"));
  ASSERT_EQ(w.size(), 2u);
  EXPECT_DOUBLE_EQ(w.samples[0], 0.125);
  EXPECT_DOUBLE_EQ(w.samples[1], 0.5);
}

TEST(Stft, ZeroInputGivesZeroMagnitude) {
  Waveform w;
  w.samples.assign(3200, 0.0);
  const auto s = compute_stft(w);
  EXPECT_EQ(s.frames(), 21);
  EXPECT_EQ(s.bins(), 321);
  EXPECT_EQ(s.magnitude.maxCoeff(), 0.0);
}

TEST(Stft, FrameCountFollowsHop) {
  EXPECT_EQ(compute_stft(test::random_waveform(3200, 1)).frames(), 21);
  EXPECT_EQ(compute_stft(test::random_waveform(3199, 1)).frames(), 20);
  EXPECT_EQ(stft_frame_count(16000), 101u);
}

TEST(Stft, ShortInputThrows) { EXPECT_THROW(compute_stft(test::random_waveform(639, 1)), DataError); }

TEST(Stft, SinePeaksAtBin40MatchesDirectDft) {
  // Reflect padding flips the sine's sign across sample 0, so only frames that
  // lie wholly inside the signal are checked for the plain sine.
  const auto w = test::sine(3200, 1000.0);
  const auto s = compute_stft(w);
  for (Eigen::Index t = 2; t <= 18; ++t) {
    Eigen::Index arg;
    s.magnitude.col(t).maxCoeff(&arg);
    EXPECT_EQ(arg, 40) << "frame " << t;
  }
  // A cosine-phase tone whose ends are symmetry points reflects cleanly, so every frame peaks at bin 40.
  Waveform c;
  for (int n = 0; n < 3201; ++n) c.samples.push_back(std::cos(2.0 * M_PI * 1000.0 * n / 16000.0));
  const auto sc = compute_stft(c);
  ASSERT_EQ(sc.frames(), 21);
  for (Eigen::Index t = 0; t < sc.frames(); ++t) {
    Eigen::Index arg;
    sc.magnitude.col(t).maxCoeff(&arg);
    EXPECT_EQ(arg, 40) << "frame " << t;
  }
  // Interior frame t starts at t·hop − 320 in the unpadded signal.
  const auto oracle = dft_magnitude(w.samples, 5 * kHop - kWindow / 2);
  for (int k = 0; k < kBins; ++k) EXPECT_NEAR(s.magnitude(k, 5), oracle[k], 1e-8);
  EXPECT_EQ(std::max_element(oracle.begin(), oracle.end()) - oracle.begin(), 40);
}

TEST(Stft, ScalingInputScalesMagnitude) {
  const auto w = test::random_waveform(4000, 7);
  auto scaled = w;
  for (auto& v : scaled.samples) v *= -2.5;
  const auto a = compute_stft(w), b = compute_stft(scaled);
  EXPECT_LT((b.magnitude - 2.5 * a.magnitude).cwiseAbs().maxCoeff(), 1e-12 * a.magnitude.maxCoeff() * 10);
}

TEST(Stft, RoundTripAbove50dB) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = test::random_waveform(16000, seed);
    const auto y = invert_stft(compute_stft(x));
    ASSERT_EQ(y.size(), 16000u);
    EXPECT_GT(test::snr_db_oracle(x.samples, y.samples), 50.0);
  }
  const auto x = test::random_waveform(1600, 9);
  const auto y = invert_stft(compute_stft(x));
  EXPECT_EQ(y.size(), 1600u);
  EXPECT_GT(test::snr_db_oracle(x.samples, y.samples), 50.0);
}

TEST(Stft, ZeroSpectrogramInvertsToZero) {
  Spectrogram s;
  s.magnitude = Eigen::MatrixXd::Zero(kBins, 21);
  s.phase = Eigen::MatrixXd::Zero(kBins, 21);
  const auto w = invert_stft(s);
  EXPECT_EQ(w.size(), 20u * kHop);
  for (double v : w.samples) EXPECT_EQ(v, 0.0);
}

TEST(Stft, PhaseRange) {
  const auto s = compute_stft(test::random_waveform(3200, 4));
  EXPECT_GT(s.phase.minCoeff(), -M_PI);
  EXPECT_LE(s.phase.maxCoeff(), M_PI);
}

TEST(Mel, ShapesAndRows) {
  const auto& fb = default_filterbank();
  EXPECT_EQ(fb.forward().rows(), 80);
  EXPECT_EQ(fb.forward().cols(), 321);
  EXPECT_EQ(fb.pinv().rows(), 321);
  EXPECT_EQ(fb.pinv().cols(), 80);
  EXPECT_GE(fb.forward().minCoeff(), 0.0);
  for (int m = 0; m < 80; ++m) EXPECT_GT(fb.forward().row(m).sum(), 0.0);
  for (int m = 1; m < 80; ++m) EXPECT_GT(fb.center_hz()[m], fb.center_hz()[m - 1]);
  EXPECT_NEAR(fb.center_hz()[79], mel_to_hz(hz_to_mel(8000.0) * 80.0 / 81.0), 1e-9);
}

TEST(Mel, PseudoInverseIdentity) {
  const auto& fb = default_filterbank();
  const Eigen::MatrixXd fpf = fb.forward() * fb.pinv() * fb.forward();
  EXPECT_LT((fpf - fb.forward()).norm() / fb.forward().norm(), 1e-6);
}

TEST(Mel, RowSpaceProjectionIsFixedPoint) {
  const auto& fb = default_filterbank();
  Rng rng(11);
  Eigen::VectorXd c(80);
  for (int i = 0; i < 80; ++i) c[i] = normal(rng);
  const Eigen::VectorXd v = fb.forward().transpose() * c;  // in the row space
  const Eigen::VectorXd back = fb.pinv() * (fb.forward() * v);
  EXPECT_LT((back - v).norm() / v.norm(), 1e-5);
}

TEST(Mel, LogMelOfZeroIsFloor) {
  const auto m = to_log_mel(Eigen::MatrixXd::Zero(321, 21), default_filterbank());
  EXPECT_EQ(m.rows(), 80);
  EXPECT_EQ(m.cols(), 21);
  EXPECT_TRUE((m.array() == std::log(kLogFloor)).all());
}

TEST(Mel, DoublingAddsLog2) {
  const auto s = compute_stft(test::random_waveform(3200, 5));
  Eigen::MatrixXd doubled = s.magnitude;
  doubled.col(3) *= 2.0;
  const auto& fb = default_filterbank();
  const auto a = to_log_mel(s.magnitude, fb), b = to_log_mel(doubled, fb);
  for (int m = 0; m < 80; ++m) EXPECT_NEAR(b(m, 3) - a(m, 3), std::log(2.0), 1e-3);
  EXPECT_EQ(b.col(4), a.col(4));
}

TEST(Mel, LogMelRoundTripInRowSpace) {
  const auto& fb = default_filterbank();
  Rng rng(3);
  Eigen::MatrixXd coeff(80, 6);
  for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff.data()[i] = uniform(rng, 0.1, 2.0);
  const Eigen::MatrixXd mag = fb.forward().transpose() * coeff;  // nonnegative, in the row space
  const auto back = from_log_mel(to_log_mel(mag, fb), fb);
  EXPECT_LT((back - mag).norm() / mag.norm(), 1e-4);
}

TEST(Mel, FloorMapsToZeroAndOutputIsNonnegative) {
  const auto& fb = default_filterbank();
  const auto z = from_log_mel(Eigen::MatrixXd::Constant(80, 20, std::log(kLogFloor)), fb);
  EXPECT_LT(z.cwiseAbs().maxCoeff(), 1e-9);
  Rng rng(8);
  Eigen::MatrixXd m(80, 20);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -12.0, 3.0);
  EXPECT_GE(from_log_mel(m, fb).minCoeff(), 0.0);
}

TEST(Segments, CountsAndRemainder) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(80, 21);
  EXPECT_EQ(slice_segments(m).size(), 1u);
  Eigen::MatrixXd m40 = Eigen::MatrixXd::Random(80, 40);
  const auto segs = slice_segments(m40);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(concat_segments(segs), m40);
  EXPECT_THROW(slice_segments(Eigen::MatrixXd::Zero(80, 19)), DataError);
}

TEST(Segments, SliceConcatIdentityOnMultiples) {
  for (int k = 1; k <= 6; ++k) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(80, 20 * k);
    EXPECT_EQ(concat_segments(slice_segments(m)), m);
  }
}
