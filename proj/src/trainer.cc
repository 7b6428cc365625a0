#include "antispoof/trainer.h"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "antispoof/eval.h"

namespace antispoof {

namespace {

struct DevSummary {
  std::array<double, kNumHeads> accuracy{};
  double loss_s = 0.0;
  double eer = 0.0;
};

std::size_t argmax(const std::vector<float>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

DevSummary evaluate_dev(const ModelParams<float>& params, const std::vector<Example>& train_set,
                        const std::vector<Example>& dev_set) {
  std::vector<std::vector<double>> genuine, spoofed;
  for (const Example& ex : train_set) (ex.genuine() ? genuine : spoofed).push_back(code_for(params, ex));

  DevSummary s;
  TrialSet trials;
  std::vector<std::vector<double>> dev_codes;
  Rng unused(0);
  for (const Example& ex : dev_set) {
    const TensorF x = spectrogram_to_tensor(inference_input(ex.features, params.arch, ex.id), params.arch);
    const ModelOutput<float> out = forward(params, x, /*training=*/false, unused);
    for (std::size_t h = 0; h < kNumHeads; ++h) s.accuracy[h] += argmax(out.logits[h]) == ex.targets.index[h];
    s.loss_s += softmax_cross_entropy<float>(out.logits[kSpoofHead], ex.targets.index[kSpoofHead]).loss;
    trials.push_back({ex.id, 0.0, ex.genuine()});
    dev_codes.emplace_back(out.code.begin(), out.code.end());
  }
  const double n = static_cast<double>(dev_set.size());
  for (double& a : s.accuracy) a /= n;
  s.loss_s /= n;

  if (genuine.size() >= 2 && spoofed.size() >= 2) {
    const GaussianModel g = fit_gaussian(genuine);
    const GaussianModel sp = fit_gaussian(spoofed);
    for (std::size_t i = 0; i < trials.size(); ++i) trials[i].score = llr_score(dev_codes[i], g, sp);
  }
  s.eer = compute_eer(trials);
  return s;
}

}  // namespace

std::string_view mode_name(TrainMode mode) { return mode == TrainMode::kMultitask ? "multitask" : "baseline"; }

LossWeights loss_weights(TrainMode mode) {
  return mode == TrainMode::kMultitask ? LossWeights::multitask() : LossWeights::baseline();
}

std::string format_epoch_line(const EpochLog& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "epoch=%d loss=%.6f acc_S=%.6f acc_E=%.6f acc_P=%.6f acc_R=%.6f", e.epoch,
                e.mean_loss, e.dev_accuracy[0], e.dev_accuracy[1], e.dev_accuracy[2], e.dev_accuracy[3]);
  return buf;
}

Spectrogram training_input(const Spectrogram& full, const ArchConfig& arch, Rng& rng) {
  if (full.bins != arch.input_bins)
    throw std::invalid_argument("features have " + std::to_string(full.bins) + " bins, network expects " +
                                std::to_string(arch.input_bins));
  return mean_normalize(fix_length(full, arch.input_frames, rng));
}

Spectrogram inference_input(const Spectrogram& full, const ArchConfig& arch, std::string_view id) {
  Rng rng(hash_string(id));
  return training_input(full, arch, rng);
}

std::vector<double> code_for(const ModelParams<float>& params, const Example& ex) {
  const std::vector<float> c = extract_code(params, inference_input(ex.features, params.arch, ex.id));
  return {c.begin(), c.end()};
}

TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& dev_set, const ArchConfig& arch,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_set.empty()) throw std::invalid_argument("train: empty train subset");
  if (dev_set.empty()) throw std::invalid_argument("train: empty dev subset");
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw std::invalid_argument("train: batch_size and epochs must be >= 1");
  std::size_t n_genuine = 0;
  for (const Example& ex : train_set) n_genuine += ex.genuine() ? 1 : 0;
  if (n_genuine == 0 || n_genuine == train_set.size())
    throw std::invalid_argument("train: train subset needs both genuine and spoofed utterances");

  const LossWeights weights = loss_weights(cfg.mode);
  ModelParams<float> params = build_lcnn<float>(arch, derive_seed(cfg.seed, {0x1a17}));
  std::vector<TensorF> values = params.tensors();
  AdamOptions adam_opts;
  adam_opts.learning_rate = cfg.learning_rate;
  AdamState<float> adam = make_adam_state<float>(values, adam_opts);

  TrainResult result;
  result.params = params;
  double best_eer = 0.0, best_loss = 0.0;
  int since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ForwardCache<float> cache;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, {0x5f1e, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<TensorF> grads = params.zeros_like();
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = train_set[order[k]];
        Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), order[k]}));
        const TensorF x = spectrogram_to_tensor(training_input(ex.features, arch, rng), arch);
        const ModelOutput<float> out = forward(params, x, /*training=*/true, rng, &cache);
        const MultitaskLoss<float> loss = multitask_loss(out.logits, ex.targets, weights);
        if (!std::isfinite(loss.total))
          throw std::runtime_error("train: non-finite loss in epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(batch_index) + " (utterance " + ex.id + ")");
        loss_sum += loss.total;
        backward(params, cache, loss.head_grads, grads);
      }
      const float inv = 1.0f / static_cast<float>(end - start);
      for (auto& g : grads)
        for (auto& v : g.data()) v *= inv;
      adam_step<float>(values, grads, adam);
      params.set_tensors(values);
    }

    const DevSummary dev = evaluate_dev(params, train_set, dev_set);
    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(train_set.size());
    log.dev_accuracy = dev.accuracy;
    log.dev_loss_s = dev.loss_s;
    log.dev_eer = dev.eer;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);

    const bool improved = epoch == 1 || dev.eer < best_eer || (dev.eer == best_eer && dev.loss_s < best_loss);
    if (improved) {
      best_eer = dev.eer;
      best_loss = dev.loss_s;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace antispoof
