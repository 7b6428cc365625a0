#ifndef ANTISPOOF_TRAINER_H_
#define ANTISPOOF_TRAINER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "antispoof/backend.h"
#include "antispoof/dsp.h"
#include "antispoof/model.h"

namespace antispoof {

enum class TrainMode { kMultitask, kBaseline };

std::string_view mode_name(TrainMode mode);
LossWeights loss_weights(TrainMode mode);

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  int epochs = 20;
  // Stop after this many epochs without a dev improvement; 0 disables.
  int patience = 5;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kMultitask;
};

// One utterance: full-length log spectrogram plus its four targets.
struct Example {
  std::string id;
  Spectrogram features;
  Targets targets;

  bool genuine() const { return targets.index[kSpoofHead] == 0; }
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;  // training objective averaged over the epoch
  std::array<double, kNumHeads> dev_accuracy{};
  double dev_loss_s = 0.0;
  double dev_eer = 0.0;  // percent, Gaussian back-end fit on train codes
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

// `epoch=<n> loss=<f> acc_S=<f> acc_E=<f> acc_P=<f> acc_R=<f>`
std::string format_epoch_line(const EpochLog& e);

// Random crop/tile to the network length, then utterance mean normalization.
Spectrogram training_input(const Spectrogram& full, const ArchConfig& arch, Rng& rng);
// Same, with the crop offset seeded from the utterance id.
Spectrogram inference_input(const Spectrogram& full, const ArchConfig& arch, std::string_view id);

std::vector<double> code_for(const ModelParams<float>& params, const Example& ex);

// Adam over mean mini-batch gradients. After each epoch the dev set is scored
// with a back-end fit on train codes; the parameters of the best dev epoch
// (lowest EER, ties broken by dev spoof-head loss) are returned.
// Throws std::runtime_error naming the batch if the loss becomes non-finite.
TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& dev_set, const ArchConfig& arch,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace antispoof

#endif  // ANTISPOOF_TRAINER_H_
