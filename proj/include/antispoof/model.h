#ifndef ANTISPOOF_MODEL_H_
#define ANTISPOOF_MODEL_H_

// Light-CNN front end with one spoofing head and three replay-noise heads
// (environment, playback device, recording device), each noise head carrying
// an extra genuine node.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "antispoof/checkpoint.h"
#include "antispoof/dsp.h"
#include "antispoof/layers.h"
#include "antispoof/manifest.h"
#include "antispoof/random.h"
#include "antispoof/tensor.h"

namespace antispoof {

enum HeadIndex : std::size_t { kSpoofHead = 0, kEnvironmentHead = 1, kPlaybackHead = 2, kRecorderHead = 3 };
inline constexpr std::size_t kNumHeads = 4;
// 2 + (4+1) + (8+1) + (7+1) = 24 output nodes.
inline constexpr std::array<std::size_t, kNumHeads> kHeadSizes = {2, 5, 9, 8};
inline constexpr std::array<const char*, kNumHeads> kHeadNames = {"S", "E", "P", "R"};

struct ArchConfig {
  std::size_t input_frames = 400;
  std::size_t input_bins = 257;
  // Divides every convolution width; 1 is the full network.
  std::size_t width_divisor = 1;
  // FC6 / FC7 affine width; FC7's output is the back-end code.
  std::size_t fc_units = 128;
  double input_dropout = 0.2;
  double fc_dropout = 0.7;

  static ArchConfig full() { return {}; }
  // 100 frames x 129 bins, widths / 4.
  static ArchConfig reduced() {
    ArchConfig a;
    a.input_frames = 100;
    a.input_bins = 129;
    a.width_divisor = 4;
    return a;
  }
  std::size_t code_dim() const { return fc_units; }
  bool operator==(const ArchConfig&) const = default;
};

enum class LayerKind { kDropout, kConv, kMfmHalves, kMfmThirds, kMaxPool, kFullyConnected };

struct LayerSpec {
  LayerKind kind = LayerKind::kDropout;
  std::string name;
  std::size_t kernel = 0;        // conv: square kernel size
  std::size_t out_channels = 0;  // conv / fc output width
  Window2 window{};              // pool
  Stride2 stride{};              // pool
  double rate = 0.0;             // dropout
  std::size_t param = 0;         // conv / fc: index of weights (bias at param + 1)
  Shape output_shape;            // expected, from the static shape rules
};

// Layers from the input dropout through FC7 and its MFM, with expected
// output shapes. Throws std::invalid_argument if the configuration cannot
// produce a valid trace (odd MFM widths, pooling windows larger than input).
std::vector<LayerSpec> trunk_plan(const ArchConfig& arch);

struct ShapeRecord {
  std::string layer;
  Shape shape;
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
};

template <typename T>
struct ModelParams {
  ArchConfig arch;
  std::vector<LayerSpec> plan;
  std::vector<Parameter<T>> params;
  // Index of the weight tensor of head h; bias follows.
  std::array<std::size_t, kNumHeads> head_param{};

  std::size_t index_of(const std::string& name) const;
  const Tensor<T>& get(const std::string& name) const { return params[index_of(name)].value; }
  std::size_t head_size(std::size_t head) const { return params[head_param[head]].value.dim(1); }
  std::size_t num_values() const;

  std::vector<Tensor<T>> tensors() const;
  void set_tensors(std::vector<Tensor<T>> values);
  // Zero tensors shaped like each parameter.
  std::vector<Tensor<T>> zeros_like() const;
};

// Fan-in scaled uniform weights, zero biases; deterministic in seed.
template <typename T>
ModelParams<T> build_lcnn(const ArchConfig& arch, std::uint64_t seed);

std::vector<NamedTensor> to_named_tensors(const ModelParams<float>& params);
// Rebuilds the architecture and copies every tensor, checking names and shapes.
ModelParams<float> from_named_tensors(const ArchConfig& arch, const std::vector<NamedTensor>& tensors);

template <typename T>
struct ModelOutput {
  std::array<std::vector<T>, kNumHeads> logits;
  std::vector<T> code;  // FC7 affine output, before its MFM
};

template <typename T>
struct LayerCache {
  Tensor<T> input;  // conv / fc inputs
  Shape input_shape;
  std::vector<std::uint32_t> source;  // routing layers
  std::vector<T> scale;               // dropout
};

template <typename T>
struct ForwardCache {
  std::vector<LayerCache<T>> layers;
  Tensor<T> features;  // trunk output consumed by the heads
};

// input: [frames, bins, 1]. Every layer output is checked against the plan;
// a mismatch throws std::logic_error. `trace`, when given, receives the
// output shape of every trunk layer.
template <typename T>
ModelOutput<T> forward(const ModelParams<T>& params, const Tensor<T>& input, bool training, Rng& rng,
                       ForwardCache<T>* cache = nullptr, std::vector<ShapeRecord>* trace = nullptr);

// Accumulates parameter gradients given d(loss)/d(logits) per head.
template <typename T>
void backward(const ModelParams<T>& params, const ForwardCache<T>& cache,
              const std::array<std::vector<T>, kNumHeads>& head_grads, std::vector<Tensor<T>>& param_grads);

struct Targets {
  std::array<std::size_t, kNumHeads> index{};
  bool operator==(const Targets&) const = default;
};

// Genuine rows map to (0, 4, 8, 7); spoofed rows to (1, env, playback, recorder).
Targets labels_to_targets(const LabeledUtterance& u);

struct LossWeights {
  std::array<double, kNumHeads> weight{1.0, 1.0, 1.0, 1.0};
  static LossWeights multitask() { return {}; }
  static LossWeights baseline() { return {{1.0, 0.0, 0.0, 0.0}}; }
};

template <typename T>
struct MultitaskLoss {
  double total = 0.0;
  std::array<double, kNumHeads> head_loss{};
  std::array<std::vector<T>, kNumHeads> head_grads;
};

// total = sum_h weight_h * CE_h; head_grads are weighted accordingly.
template <typename T>
MultitaskLoss<T> multitask_loss(const std::array<std::vector<T>, kNumHeads>& logits, const Targets& targets,
                                const LossWeights& weights = LossWeights::multitask());

// [frames, bins, 1] tensor from a spectrogram, checked against the architecture.
TensorF spectrogram_to_tensor(const Spectrogram& s, const ArchConfig& arch);

// Inference-mode forward; returns the code. Input must be arch-sized.
std::vector<float> extract_code(const ModelParams<float>& params, const Spectrogram& input);

}  // namespace antispoof

#endif  // ANTISPOOF_MODEL_H_
