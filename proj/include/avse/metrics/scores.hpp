#pragma once

#include <cmath>
#include <vector>

#include "avse/core/log.hpp"
#include "avse/dsp/stft.hpp"

namespace avse::metrics {

inline constexpr double kSnrCapDb = 100.0;
inline constexpr double kLsdEpsilon = 1e-8;

// Estimate truncated or zero-padded to the reference length.
inline std::vector<double> match_length(const dsp::Waveform& reference, const dsp::Waveform& estimate,
                                        const char* who) {
  std::vector<double> e = estimate.samples;
  if (e.size() != reference.size()) {
    log::warn(std::string(who) + ": estimate has " + std::to_string(e.size()) + " samples, reference " +
              std::to_string(reference.size()) + "; " + (e.size() > reference.size() ? "truncating" : "zero-padding"));
    e.resize(reference.size(), 0.0);
  }
  return e;
}

// 10·log10(Σc² / Σ(c−e)²), capped at +100 dB.
inline double snr_db(const dsp::Waveform& clean, const dsp::Waveform& estimate) {
  const auto e = match_length(clean, estimate, "snr_db");
  double signal = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    signal += clean.samples[i] * clean.samples[i];
    const double d = clean.samples[i] - e[i];
    residual += d * d;
  }
  if (!(signal > 0.0)) throw DataError("snr_db: clean reference is all zeros");
  if (residual == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / residual));
}

// Mean over frames of the RMS (over bins) difference of dB magnitudes.
inline double log_spectral_distance(const dsp::Waveform& clean, const dsp::Waveform& estimate) {
  if (clean.size() < static_cast<std::size_t>(dsp::kWindow) || estimate.size() < static_cast<std::size_t>(dsp::kWindow))
    throw DataError("log_spectral_distance: input shorter than one STFT window");
  dsp::Waveform e;
  e.samples = match_length(clean, estimate, "log_spectral_distance");
  const auto a = dsp::compute_stft(clean).magnitude;
  const auto b = dsp::compute_stft(e).magnitude;
  const Eigen::ArrayXXd da = 20.0 * (a.array() + kLsdEpsilon).log10();
  const Eigen::ArrayXXd db = 20.0 * (b.array() + kLsdEpsilon).log10();
  const Eigen::ArrayXXd sq = (da - db).square();
  double total = 0.0;
  for (Eigen::Index t = 0; t < sq.cols(); ++t) total += std::sqrt(sq.col(t).mean());
  return total / static_cast<double>(sq.cols());
}

}  // namespace avse::metrics
