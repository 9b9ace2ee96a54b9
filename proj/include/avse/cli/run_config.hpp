#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "avse/core/hash.hpp"
#include "avse/model/config.hpp"
#include "avse/train/trainer.hpp"

namespace avse::cli {

// All settings of a run. Loaded from one JSON file, then overridden by flags.
//
// {
//   "seed": 1,
//   "network": {"mode": "audio_visual", "width_divisor": 1, ...},
//   "data": {"self_fraction": 0.333, "snr_db": 0, "val_fraction": 0.1,
//            "test_self_fraction": 0.333, "noise_dir": "..."},
//   "train": {"initial_lr": 5e-4, "batch_size": 16, "max_epochs": 50,
//             "plateau_patience": 5, "lr_factor": 0.5, "checkpoint_dir": ""}
// }
struct RunConfig {
  std::uint64_t seed = 1;
  model::NetworkConfig network;
  double self_fraction = 1.0 / 3.0;
  double snr_db = 0.0;
  double val_fraction = 0.1;
  double test_self_fraction = 1.0 / 3.0;
  std::string noise_dir;
  train::TrainConfig train;

  void validate() const {
    network.validate();
    train.validate();
    if (!(self_fraction >= 0.0 && self_fraction <= 1.0)) throw ConfigError("data.self_fraction must lie in [0, 1]");
    if (!(test_self_fraction >= 0.0 && test_self_fraction <= 1.0))
      throw ConfigError("data.test_self_fraction must lie in [0, 1]");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("data.val_fraction must lie in [0, 1)");
    if (!std::isfinite(snr_db)) throw ConfigError("data.snr_db must be finite");
  }

  // Propagates the master seed into the module configs.
  void sync_seed() {
    network.seed = seed;
    train.seed = seed;
  }

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"network", network.architecture_json()},
            {"data",
             {{"self_fraction", self_fraction},
              {"snr_db", snr_db},
              {"val_fraction", val_fraction},
              {"test_self_fraction", test_self_fraction},
              {"noise_dir", noise_dir}}},
            {"train",
             {{"initial_lr", train.initial_lr},
              {"batch_size", train.batch_size},
              {"max_epochs", train.max_epochs},
              {"plateau_patience", train.plateau_patience},
              {"lr_factor", train.lr_factor},
              {"checkpoint_dir", train.checkpoint_dir}}}};
  }

  std::uint64_t hash() const { return fnv1a64(to_json().dump()); }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
      if (!j.is_object()) throw ConfigError("config must be a JSON object");
      for (const auto& [key, value] : j.items())
        if (key != "seed" && key != "network" && key != "data" && key != "train")
          throw ConfigError("unknown config section '" + key + "'");
      if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("network")) c.network = model::NetworkConfig::from_json(j.at("network"));
      if (j.contains("data")) {
        const auto& d = j.at("data");
        c.self_fraction = d.value("self_fraction", c.self_fraction);
        c.snr_db = d.value("snr_db", c.snr_db);
        c.val_fraction = d.value("val_fraction", c.val_fraction);
        c.test_self_fraction = d.value("test_self_fraction", c.test_self_fraction);
        c.noise_dir = d.value("noise_dir", c.noise_dir);
      }
      if (j.contains("train")) {
        const auto& t = j.at("train");
        c.train.initial_lr = t.value("initial_lr", c.train.initial_lr);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.plateau_patience = t.value("plateau_patience", c.train.plateau_patience);
        c.train.lr_factor = t.value("lr_factor", c.train.lr_factor);
        c.train.checkpoint_dir = t.value("checkpoint_dir", c.train.checkpoint_dir);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    c.sync_seed();
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
};

// Command-line overrides; unset fields keep the config value.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::size_t> width_divisor;
  std::optional<double> self_fraction, snr_db, val_fraction, test_self_fraction, lr;
  std::optional<std::size_t> batch_size, epochs;
  std::optional<std::string> noise_dir, checkpoint_dir;

  void apply(RunConfig& c) const {
    if (seed) c.seed = *seed;
    if (mode) c.network.mode = model::parse_network_mode(*mode);
    if (width_divisor) c.network.width_divisor = *width_divisor;
    if (self_fraction) c.self_fraction = *self_fraction;
    if (snr_db) c.snr_db = *snr_db;
    if (val_fraction) c.val_fraction = *val_fraction;
    if (test_self_fraction) c.test_self_fraction = *test_self_fraction;
    if (lr) c.train.initial_lr = *lr;
    if (batch_size) c.train.batch_size = *batch_size;
    if (epochs) c.train.max_epochs = *epochs;
    if (noise_dir) c.noise_dir = *noise_dir;
    if (checkpoint_dir) c.train.checkpoint_dir = *checkpoint_dir;
    c.sync_seed();
    c.validate();
  }
};

inline RunConfig resolve_config(const std::string& path, const Overrides& o) {
  RunConfig c = path.empty() ? RunConfig{} : RunConfig::load(path);
  o.apply(c);
  return c;
}

}  // namespace avse::cli
