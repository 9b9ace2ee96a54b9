#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "avse/data/dataset.hpp"
#include "avse/model/weights_io.hpp"
#include "avse/nn/loss.hpp"
#include "avse/train/adam.hpp"
#include "avse/train/schedule.hpp"

namespace avse::train {

struct TrainConfig {
  double initial_lr = 5e-4;
  int plateau_patience = 5;
  double lr_factor = 0.5;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 0;
  std::string checkpoint_dir;  // empty: no checkpoints

  void validate() const {
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2 (batch normalisation)");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be positive");
    PlateauSchedule(plateau_patience, lr_factor);
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
};

// Everything needed to continue training bit-identically.
struct TrainerState {
  std::size_t epoch = 0;  // completed epochs
  AdamState<float> adam;
  PlateauSchedule schedule;
  std::vector<EpochRecord> history;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::vector<nn::Tensor<float>> best_state;
};

struct FitResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;
// Returning true ends training after the epoch it is shown.
using StopPredicate = std::function<bool(const EpochRecord&)>;

// Batch index lists for one epoch. A trailing batch of one sample is merged
// into the previous batch since batch normalisation needs two.
inline std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(derive_seed(seed, 0x5F0FF1E), epoch));
  shuffle(order.begin(), order.end(), rng);
  return order;
}

struct Batch {
  std::optional<nn::Tensor<float>> video;
  nn::Tensor<float> noisy, clean;
};

inline Batch assemble_batch(const std::vector<data::MixtureSample>& ds, const std::vector<std::size_t>& idx,
                            bool with_video) {
  std::vector<const dsp::LogMelSegment*> noisy, clean;
  std::vector<const model::VideoSegment*> video;
  for (auto i : idx) {
    noisy.push_back(&ds[i].noisy);
    clean.push_back(&ds[i].clean_target);
    video.push_back(&ds[i].video);
  }
  Batch b{std::nullopt, model::pack_audio(noisy), model::pack_audio(clean)};
  if (with_video) b.video = model::pack_video(video);
  return b;
}

// Infer-mode mean squared error over a dataset.
inline double evaluate_loss(model::Network<float>& net, const std::vector<data::MixtureSample>& ds,
                            std::size_t batch_size = 16) {
  if (ds.empty()) throw DataError("evaluate_loss: empty dataset");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  double total = 0.0;
  for (const auto& idx : make_batches(order, batch_size)) {
    const auto b = assemble_batch(ds, idx, net.has_video_tower());
    const auto y = net.forward(b.video ? &*b.video : nullptr, b.noisy, nn::Mode::infer);
    total += nn::mse_loss(y, b.clean) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(ds.size());
}

namespace detail {

inline std::vector<nn::Tensor<float>> snapshot(model::Network<float>& net) {
  std::vector<nn::Tensor<float>> out;
  for (auto& [name, t] : net.named_state()) out.push_back(*t);
  return out;
}

inline void restore(model::Network<float>& net, const std::vector<nn::Tensor<float>>& state) {
  auto targets = net.named_state();
  if (targets.size() != state.size()) throw DataError("checkpoint state does not match network");
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (targets[i].second->shape() != state[i].shape()) throw DataError("checkpoint shape mismatch: " + targets[i].first);
    *targets[i].second = state[i];
  }
}

inline void write_tensors(io::BinaryWriter& out, const std::vector<nn::Tensor<float>>& ts) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    out.put<std::uint64_t>(t.size());
    out.array<float>(t.span());
  }
}

inline void read_tensors(io::BinaryReader& in, std::vector<nn::Tensor<float>>& ts) {
  const auto n = in.get<std::uint32_t>();
  if (n != ts.size()) throw DataError(in.path() + ": checkpoint tensor count mismatch");
  for (auto& t : ts) {
    if (in.get<std::uint64_t>() != t.size()) throw DataError(in.path() + ": checkpoint tensor size mismatch");
    in.array<float>(t.span());
  }
}

}  // namespace detail

// Checkpoint: the weight file layout, followed by
//   "AVSECKP1" | u64 epoch | adam (u64 step, f64 lr, m, v) |
//   schedule (f64 best, i32 stale) | dropout rng text | best (f64 val, u64 epoch, tensors) |
//   u32 n + history rows (u64 epoch, f64 train, f64 val, f64 lr)
inline void save_checkpoint(const std::string& path, model::Network<float>& net, const TrainerState& st) {
  const std::string tmp = path + ".tmp";
  {
    io::BinaryWriter out(tmp);
    model::write_weights_header(out, net.config());
    model::write_state(out, net);
    out.magic("AVSECKP1");
    out.put<std::uint64_t>(st.epoch);
    out.put<std::uint64_t>(st.adam.step);
    out.put<double>(st.adam.lr);
    detail::write_tensors(out, st.adam.m);
    detail::write_tensors(out, st.adam.v);
    out.put<double>(st.schedule.best);
    out.put<std::int32_t>(st.schedule.stale_epochs);
    std::ostringstream rng;
    rng << net.dropout_rng();
    out.string(rng.str());
    out.put<double>(st.best_val);
    out.put<std::uint64_t>(st.best_epoch);
    detail::write_tensors(out, st.best_state);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(st.history.size()));
    for (const auto& r : st.history) {
      out.put<std::uint64_t>(r.epoch);
      out.put<double>(r.train_loss);
      out.put<double>(r.val_loss);
      out.put<double>(r.lr);
    }
    out.close();
  }
  std::filesystem::rename(tmp, path);
}

// Restores network weights, dropout stream and trainer state. The network must
// have the architecture recorded in the checkpoint.
inline TrainerState load_checkpoint(const std::string& path, model::Network<float>& net, const TrainConfig& cfg) {
  io::BinaryReader in(path);
  const auto header = model::read_weights_header(in);
  if (header.fingerprint != net.config().fingerprint())
    throw DataError(path + ": checkpoint architecture does not match the network");
  model::assign_state(net, model::read_state(in), path);
  in.expect_magic("AVSECKP1");
  TrainerState st;
  st.adam = AdamState<float>(net.parameters(), {cfg.initial_lr});
  st.schedule = PlateauSchedule(cfg.plateau_patience, cfg.lr_factor);
  st.epoch = in.get<std::uint64_t>();
  st.adam.step = in.get<std::uint64_t>();
  st.adam.lr = in.get<double>();
  detail::read_tensors(in, st.adam.m);
  detail::read_tensors(in, st.adam.v);
  st.schedule.best = in.get<double>();
  st.schedule.stale_epochs = in.get<std::int32_t>();
  std::istringstream rng(in.string());
  rng >> net.dropout_rng();
  if (!rng) throw DataError(path + ": unreadable generator state");
  st.best_val = in.get<double>();
  st.best_epoch = in.get<std::uint64_t>();
  st.best_state = detail::snapshot(net);
  detail::read_tensors(in, st.best_state);
  const auto n = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    EpochRecord r;
    r.epoch = in.get<std::uint64_t>();
    r.train_loss = in.get<double>();
    r.val_loss = in.get<double>();
    r.lr = in.get<double>();
    st.history.push_back(r);
  }
  return st;
}

inline std::string checkpoint_path(const TrainConfig& cfg) {
  return (std::filesystem::path(cfg.checkpoint_dir) / "last.ckpt").string();
}

// Mini-batch training with per-epoch validation. On return the network holds
// the weights of the epoch with the lowest validation loss.
inline FitResult fit(model::Network<float>& net, const std::vector<data::MixtureSample>& train,
                     const std::vector<data::MixtureSample>& val, const TrainConfig& cfg,
                     const EpochCallback& on_epoch = {}, std::optional<TrainerState> resume = std::nullopt,
                     const StopPredicate& stop = {}) {
  cfg.validate();
  if (train.size() < 2) throw DataError("training needs at least 2 samples, got " + std::to_string(train.size()));
  if (val.empty()) throw DataError("validation set is empty");
  const bool video = net.has_video_tower();
  const auto params = net.parameters();

  TrainerState st;
  if (resume) {
    st = std::move(*resume);
  } else {
    st.adam = AdamState<float>(params, {cfg.initial_lr});
    st.schedule = PlateauSchedule(cfg.plateau_patience, cfg.lr_factor);
  }
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  while (st.epoch < cfg.max_epochs) {
    const std::size_t epoch = st.epoch + 1;
    const double lr = st.adam.lr;
    double sum = 0.0;
    std::size_t batch_no = 0;
    for (const auto& idx : make_batches(epoch_order(train.size(), cfg.seed, epoch), cfg.batch_size)) {
      ++batch_no;
      const auto b = assemble_batch(train, idx, video);
      net.zero_grad();
      const auto y = net.forward(b.video ? &*b.video : nullptr, b.noisy, nn::Mode::train);
      const double loss = nn::mse_loss(y, b.clean);
      if (!std::isfinite(loss))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no));
      net.backward(nn::mse_grad(y, b.clean));
      try {
        adam_step(params, st.adam);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no));
      }
      sum += loss * static_cast<double>(idx.size());
    }
    EpochRecord rec{epoch, sum / static_cast<double>(train.size()), evaluate_loss(net, val, cfg.batch_size), lr};
    if (!std::isfinite(rec.val_loss)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    if (rec.val_loss < st.best_val) {
      st.best_val = rec.val_loss;
      st.best_epoch = epoch;
      st.best_state = detail::snapshot(net);
    }
    st.schedule.update(rec.val_loss, st.adam.lr);
    st.history.push_back(rec);
    st.epoch = epoch;
    if (!cfg.checkpoint_dir.empty()) save_checkpoint(checkpoint_path(cfg), net, st);
    if (on_epoch) on_epoch(rec);
    if (stop && stop(rec)) break;
  }
  detail::restore(net, st.best_state);
  return {st.history, st.best_epoch, st.best_val};
}

}  // namespace avse::train
