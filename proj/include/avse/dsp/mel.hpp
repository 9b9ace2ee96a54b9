#pragma once

#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "avse/dsp/stft.hpp"

namespace avse::dsp {

inline constexpr int kMelBins = 80;
inline constexpr double kMelFmin = 0.0;
inline constexpr double kMelFmax = 8000.0;
inline constexpr double kLogFloor = 1e-5;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters on the HTK mel scale plus the Moore-Penrose inverse used
// to map mel energies back onto linear-frequency bins. Immutable once built.
class MelFilterbank {
 public:
  const Eigen::MatrixXd& forward() const { return forward_; }
  const Eigen::MatrixXd& pinv() const { return pinv_; }
  const Eigen::VectorXd& center_hz() const { return center_hz_; }
  double fmin() const { return kMelFmin; }
  double fmax() const { return kMelFmax; }

  friend MelFilterbank build_mel_filterbank();

 private:
  Eigen::MatrixXd forward_;  // kMelBins × kBins
  Eigen::MatrixXd pinv_;     // kBins × kMelBins
  Eigen::VectorXd center_hz_;
};

inline MelFilterbank build_mel_filterbank() {
  MelFilterbank fb;
  const double mel_lo = hz_to_mel(kMelFmin), mel_hi = hz_to_mel(kMelFmax);
  Eigen::VectorXd edges(kMelBins + 2);
  for (int i = 0; i < kMelBins + 2; ++i) edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kMelBins + 1));

  fb.forward_.setZero(kMelBins, kBins);
  fb.center_hz_ = edges.segment(1, kMelBins);
  const double bin_hz = static_cast<double>(kSampleRate) / kWindow;
  for (int m = 0; m < kMelBins; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < kBins; ++k) {
      const double f = k * bin_hz;
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      fb.forward_(m, k) = std::max(0.0, std::min(up, down));
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fb.forward_);
  fb.pinv_ = cod.pseudoInverse();
  return fb;
}

// Process-wide shared instance; construction is thread-safe.
inline const MelFilterbank& default_filterbank() {
  static const MelFilterbank fb = build_mel_filterbank();
  return fb;
}

// log(F·|S| + ε), natural log.
inline Eigen::MatrixXd to_log_mel(const Eigen::MatrixXd& magnitude, const MelFilterbank& fb) {
  if (magnitude.rows() != fb.forward().cols())
    throw DataError("to_log_mel: magnitude has " + std::to_string(magnitude.rows()) + " bins, expected " +
                    std::to_string(fb.forward().cols()));
  return ((fb.forward() * magnitude).array() + kLogFloor).log().matrix();
}

inline Eigen::MatrixXd to_log_mel(const Spectrogram& s, const MelFilterbank& fb) { return to_log_mel(s.magnitude, fb); }

// max(0, F⁺·(exp(m) − ε)).
inline Eigen::MatrixXd from_log_mel(const Eigen::MatrixXd& log_mel, const MelFilterbank& fb) {
  if (log_mel.rows() != fb.forward().rows())
    throw DataError("from_log_mel: expected " + std::to_string(fb.forward().rows()) + " mel rows");
  Eigen::MatrixXd lin = fb.pinv() * (log_mel.array().exp() - kLogFloor).matrix();
  return lin.cwiseMax(0.0);
}

}  // namespace avse::dsp
