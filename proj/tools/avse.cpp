#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "avse/cli/commands.hpp"

using namespace avse;

namespace {

void add_overrides(CLI::App* cmd, cli::Overrides& o) {
  auto opt = [&](auto& field, const char* name, const char* help) {
    cmd->add_option_function<typename std::decay_t<decltype(field)>::value_type>(
        name, [&field](const auto& v) { field = v; }, help);
  };
  opt(o.seed, "--seed", "master seed");
  opt(o.mode, "--mode", "audio_visual or audio_only");
  opt(o.width_divisor, "--width-divisor", "divide all layer widths (1 = full model)");
  opt(o.self_fraction, "--self-fraction", "fraction of self-mixtures in training data");
  opt(o.test_self_fraction, "--test-self-fraction", "fraction of self-mixtures in evaluation data");
  opt(o.snr_db, "--snr-db", "mixing SNR in dB");
  opt(o.val_fraction, "--val-fraction", "fraction of clips held out for validation");
  opt(o.lr, "--lr", "initial learning rate");
  opt(o.batch_size, "--batch-size", "mini-batch size");
  opt(o.epochs, "--epochs", "maximum number of epochs");
  opt(o.checkpoint_dir, "--checkpoint-dir", "directory for per-epoch checkpoints");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual speech enhancement"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string manifest, noise_dir, out, config, data_dir, weights, frames, wav;
  bool resume = false;
  cli::Overrides ov;

  auto* prepare = app.add_subcommand("prepare", "mix clips with noise and write aligned training data");
  prepare->add_option("--manifest", manifest, "clip manifest (JSON)")->required();
  prepare->add_option("--noise-dir", noise_dir, "directory with speech/ and ambient/ WAV files");
  prepare->add_option("--out", out, "output directory")->required();
  prepare->add_option("--config", config, "run configuration (JSON)");
  add_overrides(prepare, ov);

  auto* train = app.add_subcommand("train", "train a model on prepared data");
  train->add_option("--data", data_dir, "directory written by prepare")->required();
  train->add_option("--config", config, "run configuration (JSON)");
  train->add_option("--out", out, "output weight file")->required();
  train->add_flag("--resume", resume, "continue from the last checkpoint");
  add_overrides(train, ov);

  auto* enhance = app.add_subcommand("enhance", "enhance a noisy recording");
  enhance->add_option("--weights", weights, "weight file")->required();
  enhance->add_option("--frames", frames, "128x128 grayscale frame file (LVF1)");
  enhance->add_option("--wav", wav, "noisy 16 kHz WAV")->required();
  enhance->add_option("--out", out, "enhanced WAV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score a model on a test manifest");
  evaluate->add_option("--weights", weights, "weight file (omit for the noisy baseline only)");
  evaluate->add_option("--manifest", manifest, "test clip manifest (JSON)")->required();
  evaluate->add_option("--noise-dir", noise_dir, "directory with speech/ and ambient/ WAV files");
  evaluate->add_option("--out", out, "report directory")->required();
  evaluate->add_option("--config", config, "run configuration (JSON)");
  add_overrides(evaluate, ov);

  synth::CorpusOptions so;
  auto* synth = app.add_subcommand("synth", "write a synthetic demo corpus");
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--speakers", so.speakers, "target speakers")->capture_default_str();
  synth->add_option("--train-clips", so.train_clips, "training clips per speaker")->capture_default_str();
  synth->add_option("--test-clips", so.test_clips, "test clips per speaker")->capture_default_str();
  synth->add_option("--frames", so.frames, "video frames per clip (25 per second)")->capture_default_str();
  synth->add_option("--seed", so.seed, "corpus seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::config);
  }

  try {
    if (!noise_dir.empty()) ov.noise_dir = noise_dir;
    if (*prepare) {
      const auto cfg = cli::resolve_config(config, ov);
      auto s = cli::cmd_prepare(manifest, out, cfg);
      std::printf("prepared %zu training / %zu validation segments from %zu / %zu clips "
                  "(speech_other %zu, ambient %zu, speech_self %zu)\n",
                  s.train_samples, s.val_samples, s.train_clips, s.val_clips, s.kinds[data::NoiseKind::speech_other],
                  s.kinds[data::NoiseKind::ambient], s.kinds[data::NoiseKind::speech_self]);
    } else if (*train) {
      auto cfg = cli::resolve_config(config, ov);
      const auto r = cli::cmd_train(data_dir, out, cfg, resume);
      std::printf("best validation loss %.6f at epoch %zu; weights written to %s\n", r.best_val_loss, r.best_epoch,
                  out.c_str());
    } else if (*enhance) {
      const auto r = cli::cmd_enhance(weights, frames, wav, out);
      std::printf("enhanced %zu segments (%.2f s) to %s", r.segments, r.audio.duration_seconds(), out.c_str());
      if (r.dropped_seconds > 0.0) std::printf("; dropped %.3f s of trailing input", r.dropped_seconds);
      std::printf("\n");
    } else if (*evaluate) {
      const auto cfg = cli::resolve_config(config, ov);
      cli::cmd_evaluate(weights, manifest, out, cfg);
      std::cout << std::ifstream(std::filesystem::path(out) / "report.txt").rdbuf();
    } else if (*synth) {
      cli::cmd_synth(out, so);
      std::printf("synthetic corpus written to %s\n", out.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(ErrorKind::data);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
