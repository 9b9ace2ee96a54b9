#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "avse/metrics/scores.hpp"
#include "avse/pipeline/enhance.hpp"

namespace avse::metrics {

struct SampleScore {
  std::string speaker_id, clip_id;
  data::NoiseKind kind = data::NoiseKind::ambient;
  std::size_t samples = 0;  // scored span
  double snr_noisy = 0.0, lsd_noisy = 0.0;
  double snr_enhanced = 0.0, lsd_enhanced = 0.0;  // valid when the report has a model
};

struct GroupScore {
  std::size_t count = 0;
  double snr = 0.0, lsd = 0.0;
};

struct EvalReport {
  std::vector<SampleScore> samples;
  bool has_model = false;
  std::map<data::NoiseKind, GroupScore> noisy, enhanced;
  GroupScore noisy_all, enhanced_all;
};

// Arithmetic means per noise kind and overall.
inline void aggregate(EvalReport& r) {
  r.noisy.clear();
  r.enhanced.clear();
  r.noisy_all = r.enhanced_all = {};
  auto add = [](GroupScore& g, double snr, double lsd) {
    ++g.count;
    g.snr += snr;
    g.lsd += lsd;
  };
  for (const auto& s : r.samples) {
    add(r.noisy[s.kind], s.snr_noisy, s.lsd_noisy);
    add(r.noisy_all, s.snr_noisy, s.lsd_noisy);
    if (r.has_model) {
      add(r.enhanced[s.kind], s.snr_enhanced, s.lsd_enhanced);
      add(r.enhanced_all, s.snr_enhanced, s.lsd_enhanced);
    }
  }
  auto finish = [](GroupScore& g) {
    if (g.count == 0) return;
    g.snr /= static_cast<double>(g.count);
    g.lsd /= static_cast<double>(g.count);
  };
  for (auto* m : {&r.noisy, &r.enhanced})
    for (auto& [k, g] : *m) finish(g);
  finish(r.noisy_all);
  finish(r.enhanced_all);
}

// Scores the noisy input and, when `net` is given, the enhanced output over the
// span the pipeline reconstructs.
inline EvalReport evaluate(model::Network<float>* net, const data::NormalizationStats* stats,
                           const std::vector<data::Clip>& clips, const std::vector<data::ClipMixture>& mixtures) {
  if (mixtures.empty()) throw DataError("evaluate: empty test set");
  EvalReport r;
  r.has_model = net != nullptr;
  for (const auto& m : mixtures) {
    const auto& clip = clips.at(m.clip_index);
    SampleScore s{clip.speaker_id, clip.clip_id, m.kind};
    const auto baseline = pipeline::enhance_identity(m.noisy, &clip.frames);
    s.samples = baseline.audio.size();
    dsp::Waveform clean, noisy;
    clean.samples.assign(m.clean.samples.begin(), m.clean.samples.begin() + static_cast<std::ptrdiff_t>(s.samples));
    noisy.samples.assign(m.noisy.samples.begin(), m.noisy.samples.begin() + static_cast<std::ptrdiff_t>(s.samples));
    s.snr_noisy = snr_db(clean, noisy);
    s.lsd_noisy = log_spectral_distance(clean, noisy);
    if (net) {
      const auto out = pipeline::enhance(*net, stats, &clip.frames, m.noisy);
      s.snr_enhanced = snr_db(clean, out.audio);
      s.lsd_enhanced = log_spectral_distance(clean, out.audio);
    }
    r.samples.push_back(std::move(s));
  }
  aggregate(r);
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  auto group = [](const GroupScore& g) { return json{{"count", g.count}, {"snr_db", g.snr}, {"lsd_db", g.lsd}}; };
  auto groups = [&](const std::map<data::NoiseKind, GroupScore>& m, const GroupScore& all) {
    json j = json::object();
    for (const auto& [k, g] : m) j[data::to_string(k)] = group(g);
    j["all"] = group(all);
    return j;
  };
  json samples = json::array();
  for (const auto& s : r.samples) {
    json e{{"speaker_id", s.speaker_id}, {"clip_id", s.clip_id}, {"noise_kind", data::to_string(s.kind)},
           {"samples", s.samples}, {"noisy", {{"snr_db", s.snr_noisy}, {"lsd_db", s.lsd_noisy}}}};
    if (r.has_model) e["enhanced"] = {{"snr_db", s.snr_enhanced}, {"lsd_db", s.lsd_enhanced}};
    samples.push_back(std::move(e));
  }
  json j{{"samples", samples}, {"noisy", groups(r.noisy, r.noisy_all)}};
  if (r.has_model) j["enhanced"] = groups(r.enhanced, r.enhanced_all);
  return j;
}

// One row per system, SNR and LSD columns per noise kind.
inline std::string format_table(const EvalReport& r, const std::string& model_name = "Model") {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s", "");
  out += buf;
  for (auto k : data::kAllNoiseKinds) {
    std::snprintf(buf, sizeof buf, " | %-21s", data::to_string(k).c_str());
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-10s", "");
  out += buf;
  for (std::size_t i = 0; i < 3; ++i) {
    std::snprintf(buf, sizeof buf, " | %9s %9s  ", "SNR dB", "LSD dB");
    out += buf;
  }
  out += "\n" + std::string(10 + 3 * 24, '-') + "\n";
  auto row = [&](const std::string& name, const std::map<data::NoiseKind, GroupScore>& m) {
    std::snprintf(buf, sizeof buf, "%-10s", name.c_str());
    out += buf;
    for (auto k : data::kAllNoiseKinds) {
      auto it = m.find(k);
      if (it == m.end()) std::snprintf(buf, sizeof buf, " | %-9s %-9s  ", "-", "-");
      else std::snprintf(buf, sizeof buf, " | %9.3f %9.3f  ", it->second.snr, it->second.lsd);
      out += buf;
    }
    out += "\n";
  };
  row("Noisy", r.noisy);
  if (r.has_model) row(model_name, r.enhanced);
  return out;
}

}  // namespace avse::metrics
