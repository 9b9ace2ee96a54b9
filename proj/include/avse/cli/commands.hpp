#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "avse/cli/run_config.hpp"
#include "avse/data/dataset_io.hpp"
#include "avse/metrics/report.hpp"
#include "avse/synth/corpus.hpp"

namespace avse::cli {

namespace fs = std::filesystem;

inline std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for hashing: " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes));
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

inline fs::path parent_or_cwd(const std::string& file) {
  const fs::path p = fs::path(file).parent_path();
  return p.empty() ? fs::path(".") : p;
}

// provenance.json holds one record per command that wrote into the directory.
inline void record_provenance(const fs::path& dir, const std::string& command, std::uint64_t seed,
                              std::uint64_t config_hash, const nlohmann::json& details) {
  const fs::path path = dir / "provenance.json";
  nlohmann::json all = nlohmann::json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    all = nlohmann::json::parse(in, nullptr, false);
    if (all.is_discarded() || !all.is_object()) all = nlohmann::json::object();
  }
  all[command] = {{"tool", "avse"},
                  {"version", std::string(kVersion)},
                  {"seed", seed},
                  {"config_hash", hex64(config_hash)},
                  {"details", details}};
  write_text(path, all.dump(2) + "\n");
}

inline std::string norm_path_for(const std::string& weights) { return weights + ".norm"; }
inline std::string history_path_for(const std::string& weights) { return weights + ".history.csv"; }

// ---- prepare ---------------------------------------------------------------

struct PrepareSummary {
  std::size_t train_clips = 0, val_clips = 0, train_samples = 0, val_samples = 0;
  std::map<data::NoiseKind, std::size_t> kinds;
};

// Clip-level validation split; val_fraction 0 validates on the training clips.
inline std::vector<bool> choose_validation(std::size_t clips, double fraction, std::uint64_t seed) {
  std::vector<bool> is_val(clips, false);
  if (fraction <= 0.0 || clips < 2) return is_val;
  const auto count = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * clips)), 1, clips - 1);
  std::vector<std::size_t> order(clips);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5B117));
  shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < count; ++i) is_val[order[i]] = true;
  return is_val;
}

inline PrepareSummary cmd_prepare(const std::string& manifest_path, const std::string& out_dir, const RunConfig& cfg) {
  const auto manifest = data::read_manifest(manifest_path);
  if (manifest.entries.empty()) throw DataError(manifest_path + ": manifest is empty");
  const auto clips = data::load_clips(manifest);
  data::NoiseSources noise;
  if (!cfg.noise_dir.empty()) noise = data::load_noise_sources(cfg.noise_dir);
  else if (cfg.self_fraction < 1.0) throw ConfigError("a noise directory is required unless self_fraction is 1");

  const auto plan = data::plan_mixtures(clips, noise, {cfg.self_fraction, cfg.snr_db, cfg.seed});
  const auto is_val = choose_validation(clips.size(), cfg.val_fraction, cfg.seed);
  std::vector<data::Clip> train_clips;
  for (std::size_t i = 0; i < clips.size(); ++i)
    if (!is_val[i]) train_clips.push_back(clips[i]);
  const auto stats = data::compute_video_norm(train_clips);

  std::vector<data::MixtureSample> train, val;
  PrepareSummary sum;
  nlohmann::json split = nlohmann::json::array();
  for (const auto& m : plan) {
    auto segs = data::align_segments(clips[m.clip_index], m.clean, m.noisy, stats, m.kind, m.clip_index);
    auto& dst = is_val[m.clip_index] ? val : train;
    std::move(segs.begin(), segs.end(), std::back_inserter(dst));
    ++sum.kinds[m.kind];
    ++(is_val[m.clip_index] ? sum.val_clips : sum.train_clips);
    const auto& c = clips[m.clip_index];
    split.push_back({{"clip_id", c.clip_id},
                     {"speaker_id", c.speaker_id},
                     {"split", is_val[m.clip_index] ? "val" : "train"},
                     {"noise_kind", data::to_string(m.kind)},
                     {"noise_source", m.kind == data::NoiseKind::speech_self ? clips[m.source].clip_id
                                                                             : std::to_string(m.source)}});
  }
  if (val.empty()) val = train;
  if (train.empty()) throw DataError("no aligned training segments (clips shorter than 200 ms?)");
  sum.train_samples = train.size();
  sum.val_samples = val.size();

  // Everything is computed before the output directory is touched.
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  data::save_dataset((out / "train.avds").string(), train);
  data::save_dataset((out / "val.avds").string(), val);
  data::save_norm_stats((out / "norm.bin").string(), stats);
  nlohmann::json counts = nlohmann::json::object();
  for (auto k : data::kAllNoiseKinds) counts[data::to_string(k)] = sum.kinds[k];
  write_text(out / "split.json", nlohmann::json{{"clips", split}, {"counts", counts}}.dump(2) + "\n");
  write_text(out / "config.json", cfg.to_json().dump(2) + "\n");
  record_provenance(out, "prepare", cfg.seed, cfg.hash(),
                    {{"manifest", manifest_path},
                     {"manifest_hash", file_hash(manifest_path)},
                     {"train_samples", sum.train_samples},
                     {"val_samples", sum.val_samples}});
  return sum;
}

// ---- train -----------------------------------------------------------------

inline train::FitResult cmd_train(const std::string& data_dir, const std::string& weights_out, const RunConfig& cfg,
                                  bool resume = false, std::FILE* progress = stdout) {
  const fs::path dir(data_dir);
  for (const char* f : {"train.avds", "val.avds", "norm.bin"})
    if (!fs::exists(dir / f)) throw DataError("prepared dataset incomplete: missing " + (dir / f).string());
  const auto train_set = data::load_dataset((dir / "train.avds").string());
  const auto val_set = data::load_dataset((dir / "val.avds").string());
  const auto stats = data::load_norm_stats((dir / "norm.bin").string());

  model::Network<float> net(cfg.network);
  std::optional<train::TrainerState> state;
  if (resume) {
    if (cfg.train.checkpoint_dir.empty()) throw ConfigError("--resume needs train.checkpoint_dir");
    state = train::load_checkpoint(train::checkpoint_path(cfg.train), net, cfg.train);
  }
  const auto result = train::fit(net, train_set, val_set, cfg.train, [&](const train::EpochRecord& r) {
    if (progress)
      std::fprintf(progress, "epoch %zu/%zu  train %.6f  val %.6f  lr %.3g\n", r.epoch, cfg.train.max_epochs,
                   r.train_loss, r.val_loss, r.lr);
  }, std::move(state));

  const auto parent = parent_or_cwd(weights_out);
  fs::create_directories(parent);
  model::save_weights(net, weights_out);
  data::save_norm_stats(norm_path_for(weights_out), stats);
  std::ostringstream csv;
  csv << "epoch,train_loss,val_loss,lr\n";
  char line[160];
  for (const auto& r : result.history) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_loss, r.lr);
    csv << line;
  }
  write_text(history_path_for(weights_out), csv.str());
  record_provenance(parent, "train", cfg.seed, cfg.hash(),
                    {{"data", data_dir},
                     {"weights", weights_out},
                     {"train_hash", file_hash((dir / "train.avds").string())},
                     {"epochs", result.history.size()},
                     {"best_epoch", result.best_epoch},
                     {"best_val_loss", result.best_val_loss},
                     {"config", cfg.to_json()}});
  return result;
}

// ---- enhance ---------------------------------------------------------------

inline pipeline::EnhanceResult cmd_enhance(const std::string& weights, const std::string& frames_path,
                                           const std::string& wav_path, const std::string& out_wav) {
  auto net = model::load_weights(weights);
  std::optional<data::NormalizationStats> stats;
  if (net.has_video_tower()) {
    if (!fs::exists(norm_path_for(weights)))
      throw DataError("missing video normalisation statistics " + norm_path_for(weights));
    stats = data::load_norm_stats(norm_path_for(weights));
  }
  std::optional<data::FrameStack> frames;
  if (!frames_path.empty()) frames = data::read_frames(frames_path);
  else if (net.has_video_tower()) throw ConfigError("audio-visual weights need --frames");
  if (frames && (frames->height != model::kFrameSize || frames->width != model::kFrameSize))
    throw DataError(frames_path + ": frames must be 128x128");
  const auto noisy = dsp::read_wav(wav_path);
  const auto result = pipeline::enhance(net, stats ? &*stats : nullptr, frames ? &*frames : nullptr, noisy);
  const auto parent = parent_or_cwd(out_wav);
  fs::create_directories(parent);
  dsp::write_wav(out_wav, result.audio);
  record_provenance(parent, "enhance", net.config().seed, net.config().fingerprint(),
                    {{"weights", weights},
                     {"weights_hash", file_hash(weights)},
                     {"frames", frames_path},
                     {"wav", wav_path},
                     {"segments", result.segments},
                     {"dropped_seconds", result.dropped_seconds}});
  return result;
}

// ---- evaluate --------------------------------------------------------------

inline metrics::EvalReport cmd_evaluate(const std::string& weights, const std::string& manifest_path,
                                        const std::string& out_dir, const RunConfig& cfg) {
  const auto manifest = data::read_manifest(manifest_path);
  if (manifest.entries.empty()) throw DataError(manifest_path + ": test manifest is empty");
  const auto clips = data::load_clips(manifest);
  data::NoiseSources noise;
  if (!cfg.noise_dir.empty()) noise = data::load_noise_sources(cfg.noise_dir);
  else if (cfg.test_self_fraction < 1.0) throw ConfigError("a noise directory is required unless test_self_fraction is 1");
  const auto plan =
      data::plan_mixtures(clips, noise, {cfg.test_self_fraction, cfg.snr_db, derive_seed(cfg.seed, 0x7E57)});

  std::optional<model::Network<float>> net;
  std::optional<data::NormalizationStats> stats;
  if (!weights.empty()) {
    net.emplace(model::load_weights(weights));
    if (net->has_video_tower()) stats = data::load_norm_stats(norm_path_for(weights));
  }
  auto report = metrics::evaluate(net ? &*net : nullptr, stats ? &*stats : nullptr, clips, plan);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  auto j = metrics::to_json(report);
  j["seed"] = cfg.seed;
  j["weights"] = weights;
  write_text(out / "report.json", j.dump(2) + "\n");
  const std::string name = net ? (net->has_video_tower() ? "AV" : "Audio") : "Model";
  write_text(out / "report.txt", metrics::format_table(report, name));
  record_provenance(out, "evaluate", cfg.seed, cfg.hash(),
                    {{"weights", weights},
                     {"weights_hash", weights.empty() ? "" : file_hash(weights)},
                     {"manifest", manifest_path},
                     {"manifest_hash", file_hash(manifest_path)},
                     {"samples", report.samples.size()}});
  return report;
}

// ---- synth -----------------------------------------------------------------

inline void cmd_synth(const std::string& out_dir, const synth::CorpusOptions& o) {
  if (o.speakers == 0 || o.train_clips == 0 || o.frames < model::kVideoFrames)
    throw ConfigError("synth: need at least one speaker, one training clip and 5 frames per clip");
  const auto corpus = synth::make_corpus(o);
  synth::write_corpus(corpus, out_dir);
  const nlohmann::json options{{"speakers", o.speakers},     {"train_clips", o.train_clips},
                               {"test_clips", o.test_clips}, {"frames", o.frames},
                               {"noise_talkers", o.noise_talkers}, {"ambient_files", o.ambient_files}};
  record_provenance(out_dir, "synth", o.seed, fnv1a64(options.dump()), options);
}

}  // namespace avse::cli
