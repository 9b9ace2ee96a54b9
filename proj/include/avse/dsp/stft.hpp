#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "avse/dsp/waveform.hpp"

namespace avse::dsp {

inline constexpr int kWindow = 640;  // 40 ms, one video frame
inline constexpr int kHop = 160;     // 10 ms
inline constexpr int kBins = kWindow / 2 + 1;

// One-sided STFT split into magnitude and phase, bins × frames.
struct Spectrogram {
  Eigen::MatrixXd magnitude;
  Eigen::MatrixXd phase;
  int hop = kHop;
  int win = kWindow;

  Eigen::Index frames() const { return magnitude.cols(); }
  Eigen::Index bins() const { return magnitude.rows(); }
};

// Periodic Hann; squared, it sums to a constant at hop = win/4.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

inline std::size_t stft_frame_count(std::size_t num_samples, int hop = kHop) { return num_samples / hop + 1; }

inline void check_spectrogram(const Spectrogram& s) {
  if (s.win <= 0 || s.hop <= 0 || s.win % 2 != 0) throw DataError("spectrogram: invalid window/hop");
  if (s.magnitude.rows() != s.win / 2 + 1 || s.phase.rows() != s.magnitude.rows() ||
      s.phase.cols() != s.magnitude.cols())
    throw DataError("spectrogram: magnitude/phase shape mismatch");
  if (s.magnitude.cols() < 1) throw DataError("spectrogram: no frames");
  if ((s.magnitude.array() < 0.0).any()) throw DataError("spectrogram: negative magnitude");
}

// Hann-windowed, reflect-padded (win/2 each side) analysis; frame t is centred
// on sample t·hop.
inline Spectrogram compute_stft(const Waveform& w, int win = kWindow, int hop = kHop) {
  check_waveform(w, "compute_stft");
  const auto n = w.samples.size();
  if (n < static_cast<std::size_t>(win))
    throw DataError("compute_stft: " + std::to_string(n) + " samples is shorter than one window (" +
                    std::to_string(win) + ")");
  const int pad = win / 2;
  std::vector<double> padded(n + 2 * pad);
  for (std::size_t i = 0; i < n; ++i) padded[i + pad] = w.samples[i];
  for (int i = 0; i < pad; ++i) {
    padded[pad - 1 - i] = w.samples[i + 1];
    padded[pad + n + i] = w.samples[n - 2 - i];
  }

  const auto frames = stft_frame_count(n, hop);
  const auto window = hann_window(win);
  Spectrogram s;
  s.hop = hop;
  s.win = win;
  s.magnitude.resize(win / 2 + 1, static_cast<Eigen::Index>(frames));
  s.phase.resize(win / 2 + 1, static_cast<Eigen::Index>(frames));

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(win);
  std::vector<std::complex<double>> spec;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;
    for (int i = 0; i < win; ++i) frame[i] = padded[start + i] * window[i];
    fft.fwd(spec, frame);
    for (int k = 0; k <= win / 2; ++k) {
      s.magnitude(k, t) = std::abs(spec[k]);
      double ph = std::arg(spec[k]);
      if (ph <= -std::numbers::pi) ph = std::numbers::pi;
      s.phase(k, t) = ph;
    }
  }
  return s;
}

// Weighted overlap-add with the Hann synthesis window, normalised by the
// summed squared window. Output covers samples [0, (T-1)·hop).
inline Waveform invert_stft(const Spectrogram& s) {
  check_spectrogram(s);
  const int win = s.win, hop = s.hop, pad = win / 2;
  const auto frames = static_cast<std::size_t>(s.frames());
  const auto window = hann_window(win);
  const std::size_t padded_len = (frames - 1) * hop + win;
  std::vector<double> acc(padded_len, 0.0), norm(padded_len, 0.0);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec(win / 2 + 1);
  std::vector<double> frame(win);
  for (std::size_t t = 0; t < frames; ++t) {
    for (int k = 0; k <= win / 2; ++k) spec[k] = std::polar(s.magnitude(k, t), s.phase(k, t));
    // A real signal has real DC and Nyquist bins.
    spec[0] = {spec[0].real(), 0.0};
    spec[win / 2] = {spec[win / 2].real(), 0.0};
    fft.inv(frame, spec, win);
    const std::size_t start = t * hop;
    for (int i = 0; i < win; ++i) {
      acc[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  Waveform out;
  const std::size_t len = (frames - 1) * hop;
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double d = norm[i + pad];
    out.samples[i] = d > 1e-10 ? acc[i + pad] / d : 0.0;
  }
  return out;
}

}  // namespace avse::dsp
