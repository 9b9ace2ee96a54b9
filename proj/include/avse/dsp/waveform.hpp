#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "avse/core/error.hpp"

namespace avse::dsp {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

inline void check_waveform(const Waveform& w, const std::string& context = "waveform") {
  if (w.sample_rate != kSampleRate)
    throw DataError(context + ": sample rate " + std::to_string(w.sample_rate) + " Hz, expected 16000 Hz");
  for (double v : w.samples)
    if (!std::isfinite(v)) throw NumericError(context + ": non-finite sample");
}

inline double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace avse::dsp
