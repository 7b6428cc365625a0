#ifndef ANTISPOOF_LAYERS_H_
#define ANTISPOOF_LAYERS_H_

// Forward/backward kernels for the layer set of the LCNN: same/valid
// convolution, max pooling, max-feature-map activations, affine layers,
// inverted dropout, softmax cross-entropy, and Adam.
//
// Image tensors are [H, W, C]; convolution weights are [kh, kw, Cin, Cout];
// affine weights are [n_in, n_out]. Backward functions accumulate parameter
// gradients into caller-owned buffers so a batch can be summed in place.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "antispoof/random.h"
#include "antispoof/tensor.h"

namespace antispoof {

struct Stride2 {
  std::size_t rows = 1;
  std::size_t cols = 1;
};

struct Window2 {
  std::size_t rows = 2;
  std::size_t cols = 2;
};

enum class Padding { kSame, kValid };

// Output spatial extent: ceil(in/stride) for same, floor((in-k)/stride)+1 for valid.
std::size_t conv_output_dim(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);
// Floor mode: incomplete trailing windows are dropped.
std::size_t pool_output_dim(std::size_t in, std::size_t window, std::size_t stride);

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                 Stride2 stride = {}, Padding padding = Padding::kSame);

// grad_input may be null (first layer). grad_weights / grad_bias are accumulated.
template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_output,
                     Stride2 stride, Padding padding, Tensor<T>* grad_input, Tensor<T>& grad_weights,
                     Tensor<T>& grad_bias);

// Output of a routing layer (max pool, MFM): every output value is a copy of
// one input value, identified by its flat index in `source`.
template <typename T>
struct Routed {
  Tensor<T> output;
  std::vector<std::uint32_t> source;
};

// Scatters grad_output back through `source` into a zero tensor of input_shape.
template <typename T>
Tensor<T> route_backward(const Tensor<T>& grad_output, std::span<const std::uint32_t> source,
                         const Shape& input_shape);

// Ties route to the first maximum in row-major window order.
template <typename T>
Routed<T> maxpool2d(const Tensor<T>& input, Window2 window, Stride2 stride);

// Last dimension 2k -> k: out[c] = max(in[c], in[c+k]).
template <typename T>
Routed<T> mfm_halves(const Tensor<T>& input);

// Last dimension 3k -> 2k: out[c] = max of the three groups, out[k+c] = median.
template <typename T>
Routed<T> mfm_thirds(const Tensor<T>& input);

// input of any shape is treated as a flat vector of length n; returns [m].
template <typename T>
Tensor<T> fully_connected(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

// Returns grad w.r.t. input (shaped like input); accumulates parameter grads.
template <typename T>
Tensor<T> fully_connected_backward(const Tensor<T>& input, const Tensor<T>& weights,
                                   const Tensor<T>& grad_output, Tensor<T>& grad_weights,
                                   Tensor<T>& grad_bias);

// Inverted dropout. `scale` holds 0 or 1/(1-rate) per element; it is empty
// when the layer is inert (inference, or rate == 0).
template <typename T>
struct DropoutResult {
  Tensor<T> output;
  std::vector<T> scale;
};

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double rate, bool training, Rng& rng);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_output, std::span<const T> scale);

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  std::vector<T> grad;
};

// -log softmax(logits)[target] with max subtraction; grad = softmax - onehot.
template <typename T>
LossAndGrad<T> softmax_cross_entropy(std::span<const T> logits, std::size_t target);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamOptions options;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::uint64_t step_count = 0;
};

// Zero moments shaped like params.
template <typename T>
AdamState<T> make_adam_state(std::span<const Tensor<T>> params, AdamOptions options = {});

template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<const Tensor<T>> grads, AdamState<T>& state);

}  // namespace antispoof

#endif  // ANTISPOOF_LAYERS_H_
