#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "avse/core/binary_io.hpp"
#include "avse/dsp/wav.hpp"

namespace avse::data {

inline constexpr int kFps = 25;
inline constexpr std::size_t kSamplesPerFrame = dsp::kSampleRate / kFps;  // 640

struct ClipEntry {
  std::string speaker_id;
  std::string clip_id;
  std::string wav_path;
  std::string frames_path;
  std::size_t frame_count = 0;
};

struct ClipManifest {
  std::vector<ClipEntry> entries;
  int fps = kFps;
};

// Manifest: JSON list of {speaker_id, clip_id, wav, frames, frame_count}.
// Relative paths are resolved against the manifest's directory.
inline ClipManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_array()) throw ConfigError("manifest must be a JSON array");
  ClipManifest m;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).string();
  };
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    try {
      ClipEntry c;
      c.speaker_id = e.at("speaker_id").get<std::string>();
      c.clip_id = e.at("clip_id").get<std::string>();
      c.wav_path = resolve(e.at("wav").get<std::string>());
      c.frames_path = resolve(e.at("frames").get<std::string>());
      c.frame_count = e.at("frame_count").get<std::size_t>();
      m.entries.push_back(std::move(c));
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("manifest entry " + std::to_string(i) + ": " + ex.what());
    }
  }
  return m;
}

inline ClipManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + path + ": " + e.what());
  }
  return parse_manifest(j, std::filesystem::path(path).parent_path());
}

inline nlohmann::json to_json(const ClipManifest& m) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : m.entries)
    j.push_back({{"speaker_id", e.speaker_id},
                 {"clip_id", e.clip_id},
                 {"wav", e.wav_path},
                 {"frames", e.frames_path},
                 {"frame_count", e.frame_count}});
  return j;
}

// Grayscale frame stack, row-major u8.
struct FrameStack {
  std::uint32_t count = 0, height = 0, width = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t frame_size() const { return static_cast<std::size_t>(height) * width; }
  const std::uint8_t* frame(std::size_t i) const { return pixels.data() + i * frame_size(); }
};

// "LVF1" | u32 count | u32 height | u32 width | count·height·width bytes.
inline void write_frames(const std::string& path, const FrameStack& f) {
  if (f.pixels.size() != static_cast<std::size_t>(f.count) * f.frame_size())
    throw DataError("write_frames: pixel count does not match header");
  io::BinaryWriter out(path);
  out.magic("LVF1");
  out.put<std::uint32_t>(f.count);
  out.put<std::uint32_t>(f.height);
  out.put<std::uint32_t>(f.width);
  out.array<std::uint8_t>(f.pixels);
  out.close();
}

inline FrameStack read_frames(const std::string& path) {
  io::BinaryReader in(path);
  in.expect_magic("LVF1");
  FrameStack f;
  f.count = in.get<std::uint32_t>();
  f.height = in.get<std::uint32_t>();
  f.width = in.get<std::uint32_t>();
  if (f.height == 0 || f.width == 0 || f.height > 4096 || f.width > 4096)
    throw DataError(path + ": implausible frame size");
  f.pixels.resize(static_cast<std::size_t>(f.count) * f.frame_size());
  in.array<std::uint8_t>(f.pixels);
  return f;
}

// A clip loaded into memory.
struct Clip {
  std::string speaker_id;
  std::string clip_id;
  dsp::Waveform audio;
  FrameStack frames;
};

inline Clip load_clip(const ClipEntry& e) {
  Clip c{e.speaker_id, e.clip_id, dsp::read_wav(e.wav_path), read_frames(e.frames_path)};
  if (c.frames.count != e.frame_count)
    throw DataError(e.frames_path + ": " + std::to_string(c.frames.count) + " frames, manifest says " +
                    std::to_string(e.frame_count));
  if (c.frames.height != 128 || c.frames.width != 128)
    throw DataError(e.frames_path + ": frames must be pre-cropped 128x128 grayscale");
  return c;
}

inline std::vector<Clip> load_clips(const ClipManifest& m) {
  std::vector<Clip> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_clip(e));
  return out;
}

// Clip indices grouped by speaker, in first-appearance order within each speaker.
template <class ClipLike>
std::map<std::string, std::vector<std::size_t>> group_by_speaker(const std::vector<ClipLike>& clips) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < clips.size(); ++i) out[clips[i].speaker_id].push_back(i);
  return out;
}

}  // namespace avse::data
