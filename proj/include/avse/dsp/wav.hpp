#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "avse/core/binary_io.hpp"
#include "avse/dsp/waveform.hpp"

namespace avse::dsp {

namespace detail {

inline std::uint16_t read_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
inline std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

// Reads RIFF/WAVE with 16-bit PCM or 32-bit float payload. Stereo is averaged
// to mono. Anything other than 16 kHz is rejected; there is no resampler.
inline Waveform read_wav(const std::string& path) {
  io::BinaryReader in(path);
  std::uint8_t riff[12];
  in.bytes(riff, sizeof riff);
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
    throw DataError(path + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<std::uint8_t> payload;
  for (;;) {
    if (in.at_end()) break;
    std::uint8_t hdr[8];
    in.bytes(hdr, sizeof hdr);
    const std::uint32_t len = detail::read_u32(hdr + 4);
    std::vector<std::uint8_t> body(len);
    in.bytes(body.data(), len);
    if (len % 2 == 1 && !in.at_end()) in.get<std::uint8_t>();  // pad byte
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (len < 16) throw DataError(path + ": short fmt chunk");
      format = detail::read_u16(body.data());
      channels = detail::read_u16(body.data() + 2);
      rate = detail::read_u32(body.data() + 4);
      bits = detail::read_u16(body.data() + 14);
      if (format == 0xFFFE) {
        if (len < 40) throw DataError(path + ": short extensible fmt chunk");
        format = detail::read_u16(body.data() + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      payload = std::move(body);
      break;
    }
  }
  if (!have_fmt) throw DataError(path + ": missing fmt chunk");
  if (channels != 1 && channels != 2) throw DataError(path + ": unsupported channel count " + std::to_string(channels));
  if (rate != static_cast<std::uint32_t>(kSampleRate))
    throw DataError(path + ": sample rate " + std::to_string(rate) + " Hz, expected 16000 Hz");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw DataError(path + ": unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
                    " bits)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = payload.size() / (bytes_per_sample * channels);
  Waveform w;
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = payload.data() + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::read_u16(p)) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, sizeof f);
        acc += f;
      }
    }
    w.samples[i] = acc / channels;
  }
  check_waveform(w, path);
  return w;
}

// Writes 16-bit PCM mono at 16 kHz; samples outside [-1, 1] are clipped.
inline void write_wav(const std::string& path, const Waveform& w) {
  check_waveform(w, path);
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  io::BinaryWriter out(path);
  out.magic("RIFF");
  out.put<std::uint32_t>(36 + 2 * n);
  out.magic("WAVE");
  out.magic("fmt ");
  out.put<std::uint32_t>(16);
  out.put<std::uint16_t>(1);
  out.put<std::uint16_t>(1);
  out.put<std::uint32_t>(kSampleRate);
  out.put<std::uint32_t>(kSampleRate * 2);
  out.put<std::uint16_t>(2);
  out.put<std::uint16_t>(16);
  out.magic("data");
  out.put<std::uint32_t>(2 * n);
  std::vector<std::int16_t> pcm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = std::round(w.samples[i] * 32768.0);
    pcm[i] = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
  }
  out.array<std::int16_t>(pcm);
  out.close();
}

}  // namespace avse::dsp
