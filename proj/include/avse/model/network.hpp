#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "avse/dsp/segment.hpp"
#include "avse/model/config.hpp"
#include "avse/nn/nn.hpp"

namespace avse::model {

// Five normalised 128×128 grayscale frames covering 200 ms.
struct VideoSegment {
  nn::Tensor<float> frames{{kVideoFrames, kFrameSize, kFrameSize}};

  VideoSegment() = default;
  explicit VideoSegment(nn::Tensor<float> f) : frames(std::move(f)) {
    if (frames.shape() != nn::Shape{kVideoFrames, kFrameSize, kFrameSize})
      throw DataError("VideoSegment: expected 5x128x128, got " + nn::to_string(frames.shape()));
  }
};

// Shapes recorded during a forward pass, for inspection and tests.
struct ForwardTrace {
  struct Entry {
    std::string layer;
    nn::Shape shape;
  };
  std::vector<Entry> video, audio, fc, decoder;
  nn::Shape video_embedding, audio_embedding, fused_embedding;
};

template <class T>
struct InputGradients {
  nn::Tensor<T> video;  // empty in audio-only mode
  nn::Tensor<T> audio;
};

// Dual-tower encoder, shared fully-connected block and transposed-conv decoder.
// Audio-only mode is built without a video tower at all.
template <class T>
class Network {
 public:
  explicit Network(NetworkConfig cfg)
      : cfg_(std::move(cfg)), rng_(std::make_shared<Rng>(derive_seed(cfg_.seed, 0xD50))),
        video_("video"), audio_("audio"), fc_("fc"), decoder_("decoder") {
    cfg_.validate();
    Rng init(derive_seed(cfg_.seed, 0x1417));

    if (cfg_.mode == NetworkMode::audio_visual) {
      std::size_t in = kVideoFrames;
      for (const auto& l : video_encoder_spec()) {
        const std::size_t out = cfg_.scaled(l.filters);
        video_.template add<nn::Conv2d<T>>(in, out, l.kernel, l.stride).init(init);
        video_.template add<nn::BatchNorm<T>>(out);
        video_.template add<nn::LeakyRelu<T>>(cfg_.leaky_slope);
        video_.template add<nn::MaxPool2<T>>();
        video_.template add<nn::Dropout<T>>(cfg_.dropout_rate, rng_);
        in = out;
      }
    }

    std::size_t in = 1;
    for (const auto& l : audio_encoder_spec()) {
      const std::size_t out = cfg_.scaled(l.filters);
      audio_.template add<nn::Conv2d<T>>(in, out, l.kernel, l.stride).init(init);
      audio_.template add<nn::BatchNorm<T>>(out);
      audio_.template add<nn::LeakyRelu<T>>(cfg_.leaky_slope);
      in = out;
    }

    const std::size_t widths[] = {cfg_.fused_embedding(), cfg_.fc_hidden(), cfg_.fc_hidden(), cfg_.audio_embedding()};
    for (std::size_t i = 0; i < 3; ++i) {
      fc_.template add<nn::Dense<T>>(widths[i], widths[i + 1]).init(init);
      fc_.template add<nn::BatchNorm<T>>(widths[i + 1]);
      fc_.template add<nn::LeakyRelu<T>>(cfg_.leaky_slope);
    }
    fc_.template add<nn::Reshape<T>>(nn::Shape{cfg_.audio_channels(), 5, 5});

    in = cfg_.audio_channels();
    for (std::size_t i = 0; i < cfg_.decoder_spec.size(); ++i) {
      const auto& l = cfg_.decoder_spec[i];
      const bool last = i + 1 == cfg_.decoder_spec.size();
      const std::size_t out = last ? l.filters : cfg_.scaled(l.filters);
      decoder_.template add<nn::ConvTranspose2d<T>>(in, out, l.kernel, l.stride).init(init);
      if (!last) {
        decoder_.template add<nn::BatchNorm<T>>(out);
        decoder_.template add<nn::LeakyRelu<T>>(cfg_.leaky_slope);
      }
      in = out;
    }
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const NetworkConfig& config() const { return cfg_; }
  bool has_video_tower() const { return video_.size() > 0; }

  // video: [N,5,128,128] (audio-visual mode only); audio: [N,1,80,20].
  // Returns [N,1,80,20].
  nn::Tensor<T> forward(const nn::Tensor<T>* video, const nn::Tensor<T>& audio, nn::Mode mode,
                        ForwardTrace* trace = nullptr) {
    const bool av = cfg_.mode == NetworkMode::audio_visual;
    if (av && video == nullptr) throw DataError("audio-visual network requires a video segment");
    if (!av && video != nullptr) throw DataError("audio-only network does not accept video input");
    if (audio.rank() != 4 || audio.dim(1) != 1 || audio.dim(2) != dsp::kMelBins || audio.dim(3) != dsp::kSegmentFrames)
      throw nn::ShapeError("audio input must be [N,1,80,20], got " + nn::to_string(audio.shape()));
    const std::size_t batch = audio.dim(0);
    if (av && (video->shape() != nn::Shape{batch, kVideoFrames, kFrameSize, kFrameSize}))
      throw nn::ShapeError("video input must be [N,5,128,128], got " + nn::to_string(video->shape()));

    auto observer = [](std::vector<ForwardTrace::Entry>* sink) {
      return nn::ForwardObserver<T>([sink](const nn::Layer<T>& l, const nn::Tensor<T>& y) {
        sink->push_back({l.name(), y.shape()});
      });
    };
    const auto obs_video = trace ? observer(&trace->video) : nn::ForwardObserver<T>{};
    const auto obs_audio = trace ? observer(&trace->audio) : nn::ForwardObserver<T>{};
    const auto obs_fc = trace ? observer(&trace->fc) : nn::ForwardObserver<T>{};
    const auto obs_dec = trace ? observer(&trace->decoder) : nn::ForwardObserver<T>{};

    nn::Tensor<T> a = audio_.forward(audio, mode, &obs_audio);
    const std::size_t a_width = a.sample_size();
    nn::Tensor<T> v;
    if (av) v = video_.forward(*video, mode, &obs_video);
    const std::size_t v_width = av ? v.sample_size() : 0;
    if (a_width != cfg_.audio_embedding() || v_width != cfg_.video_embedding())
      throw nn::ShapeError("embedding widths diverge from the configuration");

    nn::Tensor<T> fused({batch, v_width + a_width});
    for (std::size_t n = 0; n < batch; ++n) {
      T* dst = fused.sample(n);
      if (av) std::copy(v.sample(n), v.sample(n) + v_width, dst);
      std::copy(a.sample(n), a.sample(n) + a_width, dst + v_width);
    }
    if (trace) {
      trace->video_embedding = av ? nn::Shape{batch, v_width} : nn::Shape{};
      trace->audio_embedding = {batch, a_width};
      trace->fused_embedding = fused.shape();
    }
    if (mode == nn::Mode::train) split_ = Split{v.shape(), a.shape()};
    else split_.reset();

    nn::Tensor<T> h = fc_.forward(std::move(fused), mode, &obs_fc);
    return decoder_.forward(std::move(h), mode, &obs_dec);
  }

  // Accumulates parameter gradients for d(loss)/d(output) = grad_out.
  InputGradients<T> backward(const nn::Tensor<T>& grad_out) {
    if (!split_) throw std::logic_error("network backward called without a train-mode forward");
    nn::Tensor<T> g = fc_.backward(decoder_.backward(grad_out));
    const std::size_t batch = g.dim(0);
    const std::size_t v_width = split_->video.empty() ? 0 : nn::numel(split_->video) / batch;
    const std::size_t a_width = nn::numel(split_->audio) / batch;
    nn::Tensor<T> gv(split_->video.empty() ? nn::Shape{} : split_->video), ga(split_->audio);
    for (std::size_t n = 0; n < batch; ++n) {
      const T* src = g.sample(n);
      if (v_width) std::copy(src, src + v_width, gv.data() + n * v_width);
      std::copy(src + v_width, src + v_width + a_width, ga.data() + n * a_width);
    }
    split_.reset();
    InputGradients<T> out;
    out.audio = audio_.backward(std::move(ga));
    if (v_width) out.video = video_.backward(std::move(gv));
    return out;
  }

  std::vector<std::pair<std::string, nn::Parameter<T>*>> named_parameters() {
    std::vector<std::pair<std::string, nn::Parameter<T>*>> out;
    for (auto* block : {&video_, &audio_, &fc_, &decoder_})
      for (auto& p : block->named_parameters()) out.push_back(p);
    return out;
  }

  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
  }

  std::vector<std::pair<std::string, nn::Tensor<T>*>> named_buffers() {
    std::vector<std::pair<std::string, nn::Tensor<T>*>> out;
    for (auto* block : {&video_, &audio_, &fc_, &decoder_})
      for (auto& b : block->named_buffers()) out.push_back(b);
    return out;
  }

  // Parameters followed by buffers, in the persisted order.
  std::vector<std::pair<std::string, nn::Tensor<T>*>> named_state() {
    std::vector<std::pair<std::string, nn::Tensor<T>*>> out;
    for (auto& [name, p] : named_parameters()) out.emplace_back(name, &p->value);
    for (auto& b : named_buffers()) out.push_back(b);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
  }

  // Dropout masks are drawn from this generator.
  Rng& dropout_rng() { return *rng_; }

 private:
  struct Split {
    nn::Shape video, audio;
  };

  NetworkConfig cfg_;
  std::shared_ptr<Rng> rng_;
  nn::Sequential<T> video_, audio_, fc_, decoder_;
  std::optional<Split> split_;
};

// Batch packing helpers.
inline nn::Tensor<float> pack_audio(const std::vector<const dsp::LogMelSegment*>& segs) {
  nn::Tensor<float> t({segs.size(), 1, dsp::kMelBins, dsp::kSegmentFrames});
  for (std::size_t n = 0; n < segs.size(); ++n) {
    float* dst = t.sample(n);
    const auto& m = segs[n]->values();
    for (int r = 0; r < dsp::kMelBins; ++r)
      for (int c = 0; c < dsp::kSegmentFrames; ++c) dst[r * dsp::kSegmentFrames + c] = static_cast<float>(m(r, c));
  }
  return t;
}

inline nn::Tensor<float> pack_video(const std::vector<const VideoSegment*>& segs) {
  const std::size_t per = kVideoFrames * kFrameSize * kFrameSize;
  nn::Tensor<float> t({segs.size(), kVideoFrames, kFrameSize, kFrameSize});
  for (std::size_t n = 0; n < segs.size(); ++n)
    std::copy(segs[n]->frames.data(), segs[n]->frames.data() + per, t.sample(n));
  return t;
}

inline dsp::LogMelSegment unpack_segment(const nn::Tensor<float>& out, std::size_t n) {
  Eigen::MatrixXd m(dsp::kMelBins, dsp::kSegmentFrames);
  const float* src = out.sample(n);
  for (int r = 0; r < dsp::kMelBins; ++r)
    for (int c = 0; c < dsp::kSegmentFrames; ++c) m(r, c) = src[r * dsp::kSegmentFrames + c];
  return dsp::LogMelSegment(std::move(m));
}

// Single-segment enhancement.
inline dsp::LogMelSegment forward(Network<float>& net, const VideoSegment* video, const dsp::LogMelSegment& audio,
                                  nn::Mode mode = nn::Mode::infer) {
  const auto a = pack_audio({&audio});
  std::optional<nn::Tensor<float>> v;
  if (video) v = pack_video({video});
  const auto y = net.forward(v ? &*v : nullptr, a, mode);
  return unpack_segment(y, 0);
}

}  // namespace avse::model
