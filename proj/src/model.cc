#include "antispoof/model.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "antispoof/errors.h"

namespace antispoof {

namespace {

// MFM keeps most of its input variance, so trunk weights use variance
// 1/fan_in rather than the ReLU-style 2/fan_in. Head weights start small so
// the initial multitask loss sits close to the uniform-prediction value.
constexpr double kTrunkInitGain = 0.70710678118654752;
constexpr double kHeadInitGain = 0.002;

class PlanBuilder {
 public:
  PlanBuilder(const ArchConfig& arch) : arch_(arch), shape_{arch.input_frames, arch.input_bins, 1} {
    if (arch.input_frames == 0 || arch.input_bins == 0) throw std::invalid_argument("trunk_plan: empty input");
    if (arch.width_divisor == 0) throw std::invalid_argument("trunk_plan: width_divisor must be positive");
    if (arch.fc_units == 0 || arch.fc_units % 2 != 0)
      throw std::invalid_argument("trunk_plan: fc_units must be positive and even");
  }

  void dropout(const std::string& name, double rate) {
    LayerSpec s = make(LayerKind::kDropout, name);
    s.rate = rate;
    push(std::move(s), shape_);
  }

  void conv(const std::string& name, std::size_t kernel, std::size_t width) {
    if (width % arch_.width_divisor != 0)
      throw std::invalid_argument("trunk_plan: " + name + " width " + std::to_string(width) +
                                  " not divisible by " + std::to_string(arch_.width_divisor));
    LayerSpec s = make(LayerKind::kConv, name);
    s.kernel = kernel;
    s.out_channels = width / arch_.width_divisor;
    s.param = take_param();
    push(std::move(s), {shape_[0], shape_[1], width / arch_.width_divisor});
  }

  void mfm_halves(const std::string& name) {
    const std::size_t c = shape_.back();
    if (c % 2 != 0) throw std::invalid_argument("trunk_plan: " + name + " needs an even width, got " + std::to_string(c));
    Shape out = shape_;
    out.back() = c / 2;
    push(make(LayerKind::kMfmHalves, name), out);
  }

  void mfm_thirds(const std::string& name) {
    const std::size_t c = shape_.back();
    if (c % 3 != 0) throw std::invalid_argument("trunk_plan: " + name + " needs a width divisible by 3");
    Shape out = shape_;
    out.back() = 2 * c / 3;
    push(make(LayerKind::kMfmThirds, name), out);
  }

  void pool(const std::string& name, std::size_t rows, std::size_t cols) {
    LayerSpec s = make(LayerKind::kMaxPool, name);
    s.window = {rows, cols};
    s.stride = {rows, cols};
    if (shape_[0] < rows || shape_[1] < cols)
      throw std::invalid_argument("trunk_plan: " + name + " window larger than its input " + shape_string(shape_));
    push(std::move(s), {pool_output_dim(shape_[0], rows, rows), pool_output_dim(shape_[1], cols, cols), shape_[2]});
  }

  void fc(const std::string& name, std::size_t units) {
    LayerSpec s = make(LayerKind::kFullyConnected, name);
    s.out_channels = units;
    s.param = take_param();
    push(std::move(s), {units});
  }

  std::vector<LayerSpec> take() { return std::move(plan_); }

 private:
  static LayerSpec make(LayerKind kind, const std::string& name) {
    LayerSpec s;
    s.kind = kind;
    s.name = name;
    return s;
  }
  std::size_t take_param() {
    const std::size_t p = next_param_;
    next_param_ += 2;
    return p;
  }
  void push(LayerSpec s, Shape out) {
    s.output_shape = out;
    plan_.push_back(std::move(s));
    shape_ = std::move(out);
  }

  const ArchConfig& arch_;
  Shape shape_;
  std::vector<LayerSpec> plan_;
  std::size_t next_param_ = 0;
};

Shape input_shape_of(const ArchConfig& arch) { return {arch.input_frames, arch.input_bins, 1}; }

template <typename T>
void fill_uniform(Tensor<T>& t, double bound, Rng& rng) {
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

std::vector<LayerSpec> trunk_plan(const ArchConfig& arch) {
  PlanBuilder b(arch);
  b.dropout("dropout1", arch.input_dropout);
  b.conv("conv1", 5, 32);
  b.mfm_halves("mfm1");
  b.pool("pool1", 2, 2);
  b.conv("conv2a", 1, 32);
  b.mfm_halves("mfm2a");
  b.conv("conv2b", 3, 48);
  b.mfm_halves("mfm2b");
  b.pool("pool2", 2, 2);
  b.conv("conv3a", 1, 48);
  b.mfm_thirds("mfm3a");
  b.conv("conv3b", 3, 64);
  b.mfm_halves("mfm3b");
  b.pool("pool3", 2, 1);
  b.conv("conv4a", 1, 64);
  b.mfm_halves("mfm4a");
  b.conv("conv4b", 3, 32);
  b.mfm_halves("mfm4b");
  b.pool("pool4", 2, 1);
  b.conv("conv5a", 1, 32);
  b.mfm_halves("mfm5a");
  b.conv("conv5b", 3, 32);
  b.mfm_halves("mfm5b");
  b.pool("pool5", 2, 2);
  b.dropout("dropout2", arch.fc_dropout);
  b.fc("fc6", arch.fc_units);
  b.mfm_halves("mfm6");
  b.fc("fc7", arch.fc_units);
  b.mfm_halves("mfm7");
  return b.take();
}

template <typename T>
std::size_t ModelParams<T>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return i;
  throw std::out_of_range("ModelParams: no parameter '" + name + "'");
}

template <typename T>
std::size_t ModelParams<T>::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

template <typename T>
std::vector<Tensor<T>> ModelParams<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

template <typename T>
void ModelParams<T>::set_tensors(std::vector<Tensor<T>> values) {
  if (values.size() != params.size()) throw std::invalid_argument("set_tensors: count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i].value.shape())
      throw std::invalid_argument("set_tensors: shape mismatch for " + params[i].name);
    params[i].value = std::move(values[i]);
  }
}

template <typename T>
std::vector<Tensor<T>> ModelParams<T>::zeros_like() const {
  std::vector<Tensor<T>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.value.shape());
  return out;
}

template <typename T>
ModelParams<T> build_lcnn(const ArchConfig& arch, std::uint64_t seed) {
  ModelParams<T> m;
  m.arch = arch;
  m.plan = trunk_plan(arch);

  auto add = [&](const std::string& name, Shape wshape, std::size_t fan_in, double gain) {
    const std::size_t index = m.params.size();
    Rng rng(derive_seed(seed, {index}));
    Tensor<T> w(std::move(wshape));
    fill_uniform(w, gain * std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
    const std::size_t out = w.shape().back();
    m.params.push_back({name + ".weight", std::move(w)});
    m.params.push_back({name + ".bias", Tensor<T>({out})});
  };

  Shape shape = input_shape_of(arch);
  for (const LayerSpec& s : m.plan) {
    if (s.kind == LayerKind::kConv) {
      const std::size_t cin = shape[2];
      add(s.name, {s.kernel, s.kernel, cin, s.out_channels}, s.kernel * s.kernel * cin, kTrunkInitGain);
    } else if (s.kind == LayerKind::kFullyConnected) {
      const std::size_t n = shape_size(shape);
      add(s.name, {n, s.out_channels}, n, kTrunkInitGain);
    }
    shape = s.output_shape;
  }
  const std::size_t features = shape_size(shape);
  const std::array<const char*, kNumHeads> head_names = {"fc_s", "fc_e", "fc_p", "fc_r"};
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    m.head_param[h] = m.params.size();
    add(head_names[h], {features, kHeadSizes[h]}, features, kHeadInitGain);
  }
  return m;
}

std::vector<NamedTensor> to_named_tensors(const ModelParams<float>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.params.size());
  for (const auto& p : params.params) out.push_back({p.name, p.value});
  return out;
}

ModelParams<float> from_named_tensors(const ArchConfig& arch, const std::vector<NamedTensor>& tensors) {
  ModelParams<float> m = build_lcnn<float>(arch, 0);
  if (tensors.size() != m.params.size())
    throw FormatError("checkpoint has " + std::to_string(tensors.size()) + " tensors, architecture expects " +
                      std::to_string(m.params.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != m.params[i].name || tensors[i].value.shape() != m.params[i].value.shape())
      throw FormatError("checkpoint tensor '" + tensors[i].name + "' " + shape_string(tensors[i].value.shape()) +
                        " does not match '" + m.params[i].name + "' " + shape_string(m.params[i].value.shape()));
    m.params[i].value = tensors[i].value;
  }
  return m;
}

template <typename T>
ModelOutput<T> forward(const ModelParams<T>& params, const Tensor<T>& input, bool training, Rng& rng,
                       ForwardCache<T>* cache, std::vector<ShapeRecord>* trace) {
  if (input.shape() != input_shape_of(params.arch))
    throw std::invalid_argument("forward: input " + shape_string(input.shape()) + ", architecture expects " +
                                shape_string(input_shape_of(params.arch)));
  ModelOutput<T> out;
  if (cache) cache->layers.assign(params.plan.size(), {});
  Tensor<T> x = input;
  for (std::size_t i = 0; i < params.plan.size(); ++i) {
    const LayerSpec& s = params.plan[i];
    LayerCache<T>* lc = cache ? &cache->layers[i] : nullptr;
    switch (s.kind) {
      case LayerKind::kDropout: {
        auto r = dropout(x, s.rate, training, rng);
        if (lc) lc->scale = std::move(r.scale);
        x = std::move(r.output);
        break;
      }
      case LayerKind::kConv: {
        Tensor<T> y = conv2d(x, params.params[s.param].value, params.params[s.param + 1].value);
        if (lc) lc->input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::kFullyConnected: {
        Tensor<T> y = fully_connected(x, params.params[s.param].value, params.params[s.param + 1].value);
        if (lc) lc->input = std::move(x);
        x = std::move(y);
        if (s.name == "fc7") out.code = x.vec();
        break;
      }
      case LayerKind::kMfmHalves:
      case LayerKind::kMfmThirds:
      case LayerKind::kMaxPool: {
        Routed<T> r = s.kind == LayerKind::kMfmHalves   ? mfm_halves(x)
                      : s.kind == LayerKind::kMfmThirds ? mfm_thirds(x)
                                                        : maxpool2d(x, s.window, s.stride);
        if (lc) {
          lc->input_shape = x.shape();
          lc->source = std::move(r.source);
        }
        x = std::move(r.output);
        break;
      }
    }
    if (x.shape() != s.output_shape)
      throw std::logic_error("forward: " + s.name + " produced " + shape_string(x.shape()) + ", expected " +
                             shape_string(s.output_shape));
    if (trace) trace->push_back({s.name, x.shape()});
  }
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    const std::size_t p = params.head_param[h];
    out.logits[h] = fully_connected(x, params.params[p].value, params.params[p + 1].value).vec();
  }
  if (cache) cache->features = std::move(x);
  return out;
}

template <typename T>
void backward(const ModelParams<T>& params, const ForwardCache<T>& cache,
              const std::array<std::vector<T>, kNumHeads>& head_grads, std::vector<Tensor<T>>& param_grads) {
  if (param_grads.size() != params.params.size()) throw std::invalid_argument("backward: gradient buffer mismatch");
  if (cache.layers.size() != params.plan.size()) throw std::invalid_argument("backward: cache from another model");

  Tensor<T> g(cache.features.shape());
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    const std::size_t p = params.head_param[h];
    if (head_grads[h].size() != params.head_size(h)) throw std::invalid_argument("backward: head gradient size");
    const Tensor<T> gh({head_grads[h].size()}, head_grads[h]);
    const Tensor<T> gx = fully_connected_backward(cache.features, params.params[p].value, gh, param_grads[p],
                                                  param_grads[p + 1]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gx[i];
  }

  std::size_t first_param_layer = params.plan.size();
  for (std::size_t i = 0; i < params.plan.size(); ++i) {
    const LayerKind k = params.plan[i].kind;
    if (k == LayerKind::kConv || k == LayerKind::kFullyConnected) {
      first_param_layer = i;
      break;
    }
  }

  for (std::size_t i = params.plan.size(); i-- > first_param_layer;) {
    const LayerSpec& s = params.plan[i];
    const LayerCache<T>& lc = cache.layers[i];
    switch (s.kind) {
      case LayerKind::kDropout:
        g = dropout_backward(g, std::span<const T>(lc.scale));
        break;
      case LayerKind::kConv: {
        Tensor<T> gin;
        conv2d_backward(lc.input, params.params[s.param].value, g, {}, Padding::kSame,
                        i > first_param_layer ? &gin : nullptr, param_grads[s.param], param_grads[s.param + 1]);
        g = std::move(gin);
        break;
      }
      case LayerKind::kFullyConnected:
        g = fully_connected_backward(lc.input, params.params[s.param].value, g, param_grads[s.param],
                                     param_grads[s.param + 1]);
        break;
      case LayerKind::kMfmHalves:
      case LayerKind::kMfmThirds:
      case LayerKind::kMaxPool:
        g = route_backward(g, std::span<const std::uint32_t>(lc.source), lc.input_shape);
        break;
    }
  }
}

Targets labels_to_targets(const LabeledUtterance& u) {
  u.validate();
  Targets t;
  t.index[kSpoofHead] = u.is_genuine() ? 0 : 1;
  t.index[kEnvironmentHead] = static_cast<std::size_t>(u.env_label);
  t.index[kPlaybackHead] = static_cast<std::size_t>(u.playback_label);
  t.index[kRecorderHead] = static_cast<std::size_t>(u.recorder_label);
  return t;
}

template <typename T>
MultitaskLoss<T> multitask_loss(const std::array<std::vector<T>, kNumHeads>& logits, const Targets& targets,
                                const LossWeights& weights) {
  MultitaskLoss<T> r;
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    if (targets.index[h] >= logits[h].size())
      throw std::invalid_argument(std::string("multitask_loss: target ") + std::to_string(targets.index[h]) +
                                  " out of range for head " + kHeadNames[h]);
    LossAndGrad<T> ce = softmax_cross_entropy<T>(logits[h], targets.index[h]);
    r.head_loss[h] = ce.loss;
    r.total += weights.weight[h] * ce.loss;
    for (auto& g : ce.grad) g = static_cast<T>(weights.weight[h] * g);
    r.head_grads[h] = std::move(ce.grad);
  }
  return r;
}

TensorF spectrogram_to_tensor(const Spectrogram& s, const ArchConfig& arch) {
  if (s.frames != arch.input_frames || s.bins != arch.input_bins)
    throw std::invalid_argument("spectrogram " + std::to_string(s.frames) + "x" + std::to_string(s.bins) +
                                " does not match network input " + std::to_string(arch.input_frames) + "x" +
                                std::to_string(arch.input_bins));
  return TensorF({s.frames, s.bins, 1}, std::vector<float>(s.values.begin(), s.values.end()));
}

std::vector<float> extract_code(const ModelParams<float>& params, const Spectrogram& input) {
  Rng unused(0);
  return forward(params, spectrogram_to_tensor(input, params.arch), /*training=*/false, unused).code;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> build_lcnn<float>(const ArchConfig&, std::uint64_t);
template ModelParams<double> build_lcnn<double>(const ArchConfig&, std::uint64_t);
template ModelOutput<float> forward<float>(const ModelParams<float>&, const TensorF&, bool, Rng&,
                                           ForwardCache<float>*, std::vector<ShapeRecord>*);
template ModelOutput<double> forward<double>(const ModelParams<double>&, const TensorD&, bool, Rng&,
                                             ForwardCache<double>*, std::vector<ShapeRecord>*);
template void backward<float>(const ModelParams<float>&, const ForwardCache<float>&,
                              const std::array<std::vector<float>, kNumHeads>&, std::vector<TensorF>&);
template void backward<double>(const ModelParams<double>&, const ForwardCache<double>&,
                               const std::array<std::vector<double>, kNumHeads>&, std::vector<TensorD>&);
template MultitaskLoss<float> multitask_loss<float>(const std::array<std::vector<float>, kNumHeads>&,
                                                    const Targets&, const LossWeights&);
template MultitaskLoss<double> multitask_loss<double>(const std::array<std::vector<double>, kNumHeads>&,
                                                      const Targets&, const LossWeights&);

}  // namespace antispoof
