#include <gtest/gtest.h>

#include <cmath>
#include <regex>

#include "antispoof/trainer.h"
#include "test_support.h"

namespace antispoof {
namespace {

ArchConfig tiny_arch() {
  ArchConfig a;
  a.input_frames = 32;
  a.input_bins = 17;
  a.width_divisor = 4;
  return a;
}

// Spoofed examples carry strong frame-to-frame fluctuation in the upper bins,
// which survives per-bin mean removal; genuine ones do not.
std::vector<Example> separable_set(std::size_t n, std::uint64_t seed, const std::string& prefix) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool spoofed = i % 2 == 1;
    Example ex;
    ex.id = prefix + std::to_string(i);
    ex.features.frames = 24 + rng.below(30);
    ex.features.bins = 17;
    ex.features.values.resize(ex.features.frames * 17);
    for (std::size_t f = 0; f < ex.features.frames; ++f)
      for (std::size_t b = 0; b < 17; ++b)
        ex.features.at(f, b) = -5.0 + 0.3 * rng.normal() + (spoofed && b >= 9 ? 3.0 * rng.normal() : 0.0);
    ex.targets = spoofed ? Targets{{1, rng.below(4), rng.below(8), rng.below(7)}} : Targets{{0, 4, 8, 7}};
    out.push_back(std::move(ex));
  }
  return out;
}

TrainConfig quick_config(TrainMode mode) {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 3;
  c.patience = 0;
  c.seed = 5;
  c.mode = mode;
  return c;
}

TEST(Train, FirstEpochBeatsUniformLoss) {
  const auto train_set = separable_set(64, 1, "t"), dev_set = separable_set(20, 2, "d");
  const auto r = train(train_set, dev_set, tiny_arch(), quick_config(TrainMode::kMultitask));
  ASSERT_EQ(r.log.size(), 3u);
  const double uniform = std::log(2.0) + std::log(5.0) + std::log(9.0) + std::log(8.0);
  EXPECT_LT(r.log[0].mean_loss, uniform);
  EXPECT_LT(r.log.back().mean_loss, r.log[0].mean_loss);
  EXPECT_GE(r.best_epoch, 1);
}

TEST(Train, DeterministicGivenSeed) {
  const auto train_set = separable_set(32, 3, "t"), dev_set = separable_set(10, 4, "d");
  const auto cfg = quick_config(TrainMode::kMultitask);
  const auto a = train(train_set, dev_set, tiny_arch(), cfg);
  const auto b = train(train_set, dev_set, tiny_arch(), cfg);
  EXPECT_EQ(a.params.tensors(), b.params.tensors());
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(format_epoch_line(a.log[i]), format_epoch_line(b.log[i]));
}

TEST(Train, BaselineLeavesNoiseHeadsUntouched) {
  const auto train_set = separable_set(32, 5, "t"), dev_set = separable_set(10, 6, "d");
  auto cfg = quick_config(TrainMode::kBaseline);
  cfg.epochs = 2;
  std::vector<ModelParams<float>> snapshots;
  const auto base = train(train_set, dev_set, tiny_arch(), cfg);
  cfg.mode = TrainMode::kMultitask;
  const auto multi = train(train_set, dev_set, tiny_arch(), cfg);
  // Both start from the same initialization.
  const auto init = build_lcnn<float>(tiny_arch(), derive_seed(cfg.seed, {0x1a17}));
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    const std::size_t p = base.params.head_param[h];
    for (std::size_t k : {p, p + 1}) {
      if (h == kSpoofHead) {
        EXPECT_NE(base.params.params[k].value, init.params[k].value);
      } else {
        EXPECT_EQ(base.params.params[k].value, init.params[k].value) << base.params.params[k].name;
        EXPECT_NE(multi.params.params[k].value, init.params[k].value) << multi.params.params[k].name;
      }
    }
  }
}

TEST(Train, EarlyStopAndCallback) {
  const auto train_set = separable_set(32, 7, "t"), dev_set = separable_set(10, 8, "d");
  auto cfg = quick_config(TrainMode::kBaseline);
  cfg.epochs = 12;
  cfg.patience = 2;
  int calls = 0;
  const auto r = train(train_set, dev_set, tiny_arch(), cfg, [&](const EpochLog& e) { EXPECT_EQ(e.epoch, ++calls); });
  EXPECT_EQ(calls, static_cast<int>(r.log.size()));
  // Training stops no later than `patience` epochs after the best one.
  EXPECT_LE(static_cast<int>(r.log.size()), r.best_epoch + cfg.patience);
  for (const auto& e : r.log) {
    EXPECT_GE(r.log[r.best_epoch - 1].dev_eer, 0.0);
    EXPECT_LE(r.log[r.best_epoch - 1].dev_eer, e.dev_eer);
  }
}

TEST(Train, CodesSeparateAfterTraining) {
  const auto train_set = separable_set(64, 9, "t"), dev_set = separable_set(20, 10, "d");
  auto cfg = quick_config(TrainMode::kMultitask);
  cfg.epochs = 4;
  const auto r = train(train_set, dev_set, tiny_arch(), cfg);
  std::vector<double> mean_g(128, 0.0), mean_s(128, 0.0);
  for (const auto& ex : dev_set) {
    const auto c = code_for(r.params, ex);
    ASSERT_EQ(c.size(), 128u);
    EXPECT_EQ(c, code_for(r.params, ex));
    auto& m = ex.genuine() ? mean_g : mean_s;
    for (std::size_t d = 0; d < 128; ++d) m[d] += c[d] / 10.0;
  }
  double dist = 0.0;
  for (std::size_t d = 0; d < 128; ++d) dist += std::pow(mean_g[d] - mean_s[d], 2);
  EXPECT_GT(std::sqrt(dist), 1e-3);
  EXPECT_LT(r.log[r.best_epoch - 1].dev_eer, 50.0);
}

TEST(Train, NonFiniteLossNamesBatch) {
  auto train_set = separable_set(16, 11, "t");
  const auto dev_set = separable_set(6, 12, "d");
  for (auto& v : train_set[5].features.values) v = std::numeric_limits<double>::infinity();
  try {
    train(train_set, dev_set, tiny_arch(), quick_config(TrainMode::kMultitask));
    ADD_FAILURE() << "expected failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos) << e.what();
  }
}

TEST(Train, RejectsDegenerateSets) {
  const auto dev_set = separable_set(6, 13, "d");
  EXPECT_THROW(train({}, dev_set, tiny_arch(), quick_config(TrainMode::kMultitask)), std::invalid_argument);
  auto one_class = separable_set(8, 14, "t");
  std::erase_if(one_class, [](const Example& e) { return !e.genuine(); });
  EXPECT_THROW(train(one_class, dev_set, tiny_arch(), quick_config(TrainMode::kMultitask)), std::invalid_argument);
  auto cfg = quick_config(TrainMode::kMultitask);
  cfg.batch_size = 0;
  EXPECT_THROW(train(separable_set(8, 15, "t"), dev_set, tiny_arch(), cfg), std::invalid_argument);
}

TEST(EpochLine, Format) {
  EpochLog e;
  e.epoch = 3;
  e.mean_loss = 1.5;
  e.dev_accuracy = {0.5, 0.25, 1.0, 0.0};
  const std::string line = format_epoch_line(e);
  EXPECT_TRUE(std::regex_match(line, std::regex(R"(epoch=3 loss=1\.5\d* acc_S=0\.5\d* acc_E=0\.25\d* acc_P=1\.0*\d* acc_R=0\.0*)")))
      << line;
}

TEST(Inputs, InferenceCropDependsOnlyOnId) {
  const auto set = separable_set(2, 16, "x");
  Spectrogram longer = set[0].features;
  longer.frames = 0;
  longer.values.clear();
  Rng rng(1);
  for (int i = 0; i < 80; ++i) {
    for (std::size_t b = 0; b < 17; ++b) longer.values.push_back(rng.normal());
    ++longer.frames;
  }
  EXPECT_EQ(inference_input(longer, tiny_arch(), "abc"), inference_input(longer, tiny_arch(), "abc"));
  const auto s = inference_input(longer, tiny_arch(), "abc");
  EXPECT_EQ(s.frames, 32u);
  ArchConfig wrong = tiny_arch();
  wrong.input_bins = 18;
  EXPECT_THROW(inference_input(longer, wrong, "abc"), std::invalid_argument);
}

}  // namespace
}  // namespace antispoof
