#pragma once

#include <vector>

#include <Eigen/Dense>

#include "avse/dsp/mel.hpp"

namespace avse::dsp {

inline constexpr int kSegmentFrames = 20;  // 200 ms of STFT columns

// Fixed 80×20 block of log-mel values.
class LogMelSegment {
 public:
  LogMelSegment() : values_(Eigen::MatrixXd::Constant(kMelBins, kSegmentFrames, std::log(kLogFloor))) {}
  explicit LogMelSegment(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() != kMelBins || values_.cols() != kSegmentFrames)
      throw DataError("LogMelSegment: expected 80x20, got " + std::to_string(values_.rows()) + "x" +
                      std::to_string(values_.cols()));
  }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

 private:
  Eigen::MatrixXd values_;
};

// Consecutive non-overlapping 20-column slices; trailing columns dropped.
inline std::vector<LogMelSegment> slice_segments(const Eigen::MatrixXd& log_mel) {
  if (log_mel.cols() < kSegmentFrames)
    throw DataError("slice_segments: " + std::to_string(log_mel.cols()) + " frames, need at least 20");
  std::vector<LogMelSegment> out;
  const Eigen::Index count = log_mel.cols() / kSegmentFrames;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k)
    out.emplace_back(Eigen::MatrixXd(log_mel.middleCols(k * kSegmentFrames, kSegmentFrames)));
  return out;
}

inline Eigen::MatrixXd concat_segments(const std::vector<LogMelSegment>& segments) {
  Eigen::MatrixXd out(kMelBins, static_cast<Eigen::Index>(segments.size()) * kSegmentFrames);
  for (std::size_t k = 0; k < segments.size(); ++k)
    out.middleCols(static_cast<Eigen::Index>(k) * kSegmentFrames, kSegmentFrames) = segments[k].values();
  return out;
}

}  // namespace avse::dsp
