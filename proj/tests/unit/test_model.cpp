#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "avse/model/weights_io.hpp"
#include "model_util.hpp"
#include "test_util.hpp"

using namespace avse;
using namespace avse::model;

namespace {

NetworkConfig small_config(NetworkMode mode = NetworkMode::audio_visual) {
  NetworkConfig cfg;
  cfg.mode = mode;
  cfg.width_divisor = 16;
  cfg.seed = 3;
  return cfg;
}

std::vector<std::size_t> spatial(const std::vector<ForwardTrace::Entry>& entries, const std::string& kind) {
  std::vector<std::size_t> out;
  for (const auto& e : entries)
    if (e.layer.ends_with(kind)) out.push_back(e.shape[2]);
  return out;
}

}  // namespace

TEST(Network, PublishedEmbeddingWidths) {
  NetworkConfig cfg;
  EXPECT_EQ(cfg.video_embedding(), 2048u);
  EXPECT_EQ(cfg.audio_embedding(), 3200u);
  EXPECT_EQ(cfg.fused_embedding(), 5248u);
  Network<float> net(cfg);
  Rng rng(1);
  const auto video = test::random_input<float>({1, 5, 128, 128}, rng);
  const auto audio = test::random_input<float>({1, 1, 80, 20}, rng);
  ForwardTrace trace;
  const auto y = net.forward(&video, audio, nn::Mode::infer, &trace);
  EXPECT_EQ(trace.video_embedding, (nn::Shape{1, 2048}));
  EXPECT_EQ(trace.audio_embedding, (nn::Shape{1, 3200}));
  EXPECT_EQ(trace.fused_embedding, (nn::Shape{1, 5248}));
  EXPECT_EQ(y.shape(), (nn::Shape{1, 1, 80, 20}));
  EXPECT_TRUE(y.all_finite());

  EXPECT_EQ(spatial(trace.video, "maxpool"), (std::vector<std::size_t>{64, 32, 16, 8, 4, 2}));
  std::vector<nn::Shape> audio_convs;
  for (const auto& e : trace.audio)
    if (e.layer.ends_with("conv")) audio_convs.push_back(e.shape);
  ASSERT_EQ(audio_convs.size(), 5u);
  const std::pair<std::size_t, std::size_t> expected[] = {{40, 10}, {40, 10}, {20, 5}, {10, 5}, {5, 5}};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(audio_convs[i][2], expected[i].first);
    EXPECT_EQ(audio_convs[i][3], expected[i].second);
  }
  std::vector<std::size_t> fc_widths;
  for (const auto& e : trace.fc)
    if (e.layer.ends_with("dense")) fc_widths.push_back(e.shape[1]);
  EXPECT_EQ(fc_widths, (std::vector<std::size_t>{1312, 1312, 3200}));
}

TEST(Network, DecoderRestoresInputShapeForAnyWeights) {
  for (std::uint64_t seed : {1u, 2u}) {
    auto cfg = small_config();
    cfg.seed = seed;
    Network<float> net(cfg);
    Rng rng(seed);
    const auto video = test::random_input<float>({3, 5, 128, 128}, rng);
    const auto audio = test::random_input<float>({3, 1, 80, 20}, rng, 4.0);
    const auto y = net.forward(&video, audio, nn::Mode::train);
    EXPECT_EQ(y.shape(), audio.shape());
    EXPECT_TRUE(y.all_finite());
  }
}

TEST(Network, AudioOnlyHasNoVideoTower) {
  NetworkConfig cfg = small_config(NetworkMode::audio_only);
  Network<float> net(cfg);
  EXPECT_FALSE(net.has_video_tower());
  EXPECT_EQ(cfg.fused_embedding(), cfg.audio_embedding());
  EXPECT_EQ(NetworkConfig{.mode = NetworkMode::audio_only}.fused_embedding(), 3200u);
  for (const auto& [name, p] : net.named_parameters()) EXPECT_FALSE(name.starts_with("video")) << name;
  Rng rng(2);
  const auto audio = test::random_input<float>({2, 1, 80, 20}, rng);
  const auto video = test::random_input<float>({2, 5, 128, 128}, rng);
  EXPECT_EQ(net.forward(nullptr, audio, nn::Mode::infer).shape(), audio.shape());
  EXPECT_THROW(net.forward(&video, audio, nn::Mode::infer), DataError);
}

TEST(Network, MissingVideoIsRejected) {
  Network<float> net(small_config());
  Rng rng(3);
  EXPECT_THROW(net.forward(nullptr, test::random_input<float>({1, 1, 80, 20}, rng), nn::Mode::infer), DataError);
  const auto video = test::random_input<float>({1, 5, 64, 64}, rng);
  EXPECT_THROW(net.forward(&video, test::random_input<float>({1, 1, 80, 20}, rng), nn::Mode::infer), nn::ShapeError);
}

TEST(Network, InvalidDecoderSpecRejected) {
  NetworkConfig cfg;
  cfg.decoder_spec.pop_back();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = NetworkConfig{};
  cfg.decoder_spec.back().filters = 2;
  EXPECT_THROW(Network<float>{cfg}, ConfigError);
}

TEST(Network, InferDeterministicAndTrainUsesDropout) {
  Network<float> net(small_config());
  Rng rng(4);
  const auto video = test::random_input<float>({2, 5, 128, 128}, rng);
  const auto audio = test::random_input<float>({2, 1, 80, 20}, rng);
  const auto a = net.forward(&video, audio, nn::Mode::infer);
  const auto b = net.forward(&video, audio, nn::Mode::infer);
  EXPECT_EQ(a, b);
}

TEST(Network, SingleSegmentForward) {
  Network<float> net(small_config());
  VideoSegment v;
  dsp::LogMelSegment a;
  const auto out = model::forward(net, &v, a);
  EXPECT_EQ(out.values().rows(), 80);
  EXPECT_EQ(out.values().cols(), 20);
}

TEST(Network, GradientsMatchFiniteDifferences) {
  NetworkConfig cfg;
  cfg.width_divisor = 64;
  cfg.seed = 9;
  const auto report = test::check_network_gradients(cfg, 4, 4, 21);
  for (const auto& e : report.entries) EXPECT_LT(e.relative_error, 1e-4) << e.name;
  auto ao = cfg;
  ao.mode = NetworkMode::audio_only;
  const auto r2 = test::check_network_gradients(ao, 3, 4, 22);
  for (const auto& e : r2.entries) EXPECT_LT(e.relative_error, 1e-4) << e.name;
}

TEST(Weights, RoundTripIsBitIdentical) {
  test::TempDir dir("weights");
  Network<float> net(small_config());
  Rng rng(5);
  const auto video = test::random_input<float>({2, 5, 128, 128}, rng);
  const auto audio = test::random_input<float>({2, 1, 80, 20}, rng);
  // A train pass moves running statistics away from their defaults.
  net.forward(&video, audio, nn::Mode::train);
  const auto before = net.forward(&video, audio, nn::Mode::infer);
  save_weights(net, dir.file("w.bin"));
  auto loaded = load_weights(dir.file("w.bin"), net.config());
  EXPECT_EQ(loaded.forward(&video, audio, nn::Mode::infer), before);
  auto embedded = load_weights(dir.file("w.bin"));
  EXPECT_EQ(embedded.forward(&video, audio, nn::Mode::infer), before);
}

TEST(Weights, FingerprintMismatch) {
  test::TempDir dir("weights");
  Network<float> net(small_config());
  save_weights(net, dir.file("w.bin"));
  EXPECT_THROW(load_weights(dir.file("w.bin"), small_config(NetworkMode::audio_only)), DataError);
  auto other = small_config();
  other.seed = 99;  // seed is not part of the architecture
  EXPECT_NO_THROW(load_weights(dir.file("w.bin"), other));
}

TEST(Weights, TruncatedAndCorruptFiles) {
  test::TempDir dir("weights");
  Network<float> net(small_config());
  save_weights(net, dir.file("w.bin"));
  const auto size = std::filesystem::file_size(dir.file("w.bin"));
  std::filesystem::copy_file(dir.file("w.bin"), dir.file("t.bin"));
  std::filesystem::resize_file(dir.file("t.bin"), size - 100);
  EXPECT_THROW(load_weights(dir.file("t.bin")), DataError);
  {
    std::fstream f(dir.file("w.bin"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  EXPECT_THROW(load_weights(dir.file("w.bin")), DataError);
  EXPECT_THROW(load_weights(dir.file("missing.bin")), DataError);
}

TEST(Weights, VersionMismatch) {
  test::TempDir dir("weights");
  Network<float> net(small_config());
  save_weights(net, dir.file("w.bin"));
  {
    std::fstream f(dir.file("w.bin"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t v = 7;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  EXPECT_THROW(load_weights(dir.file("w.bin")), DataError);
}
