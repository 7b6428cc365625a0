#include "antispoof/layers.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace antispoof {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  std::size_t in_h, in_w, in_c;
  std::size_t k_h, k_w, out_c;
  std::size_t out_h, out_w;
  std::size_t pad_top, pad_left;
  Stride2 stride;

  std::size_t patch() const { return k_h * k_w * in_c; }
  std::size_t positions() const { return out_h * out_w; }
  bool is_pointwise() const {
    return k_h == 1 && k_w == 1 && stride.rows == 1 && stride.cols == 1 && pad_top == 0 && pad_left == 0;
  }
};

std::size_t same_padding_before(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t out) {
  const std::size_t needed = (out - 1) * stride + kernel;
  return needed > in ? (needed - in) / 2 : 0;
}

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                           Stride2 stride, Padding padding) {
  if (input.rank() != 3 || weights.rank() != 4 || bias.rank() != 1)
    throw std::invalid_argument("conv2d: expected input [H,W,C], weights [kh,kw,Cin,Cout], bias [Cout]; got " +
                                shape_string(input.shape()) + ", " + shape_string(weights.shape()) + ", " +
                                shape_string(bias.shape()));
  if (weights.dim(2) != input.dim(2) || bias.dim(0) != weights.dim(3))
    throw std::invalid_argument("conv2d: channel mismatch between input " + shape_string(input.shape()) +
                                ", weights " + shape_string(weights.shape()) + " and bias " +
                                shape_string(bias.shape()));
  if (stride.rows == 0 || stride.cols == 0) throw std::invalid_argument("conv2d: zero stride");
  ConvGeometry g{};
  g.in_h = input.dim(0);
  g.in_w = input.dim(1);
  g.in_c = input.dim(2);
  g.k_h = weights.dim(0);
  g.k_w = weights.dim(1);
  g.out_c = weights.dim(3);
  g.stride = stride;
  g.out_h = conv_output_dim(g.in_h, g.k_h, stride.rows, padding);
  g.out_w = conv_output_dim(g.in_w, g.k_w, stride.cols, padding);
  if (padding == Padding::kSame) {
    g.pad_top = same_padding_before(g.in_h, g.k_h, stride.rows, g.out_h);
    g.pad_left = same_padding_before(g.in_w, g.k_w, stride.cols, g.out_w);
  }
  return g;
}

// Patch matrix [positions, kh*kw*Cin]; column order matches the weight layout.
template <typename T>
RowMatrix<T> im2col(const Tensor<T>& input, const ConvGeometry& g) {
  RowMatrix<T> cols = RowMatrix<T>::Zero(static_cast<Eigen::Index>(g.positions()),
                                         static_cast<Eigen::Index>(g.patch()));
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      T* row = cols.data() + (oy * g.out_w + ox) * g.patch();
      for (std::size_t ky = 0; ky < g.k_h; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride.rows + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
        for (std::size_t kx = 0; kx < g.k_w; ++kx) {
          const auto ix =
              static_cast<std::ptrdiff_t>(ox * g.stride.cols + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
          const T* src = input.raw() + (static_cast<std::size_t>(iy) * g.in_w + static_cast<std::size_t>(ix)) * g.in_c;
          std::copy_n(src, g.in_c, row + (ky * g.k_w + kx) * g.in_c);
        }
      }
    }
  }
  return cols;
}

template <typename T>
void col2im_add(const RowMatrix<T>& cols, const ConvGeometry& g, Tensor<T>& grad_input) {
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const T* row = cols.data() + (oy * g.out_w + ox) * g.patch();
      for (std::size_t ky = 0; ky < g.k_h; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride.rows + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
        for (std::size_t kx = 0; kx < g.k_w; ++kx) {
          const auto ix =
              static_cast<std::ptrdiff_t>(ox * g.stride.cols + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
          T* dst = grad_input.raw() + (static_cast<std::size_t>(iy) * g.in_w + static_cast<std::size_t>(ix)) * g.in_c;
          const T* src = row + (ky * g.k_w + kx) * g.in_c;
          for (std::size_t c = 0; c < g.in_c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

template <typename T>
std::size_t channels_of(const Tensor<T>& t, const char* what) {
  if (t.rank() == 0 || t.size() == 0) throw std::invalid_argument(std::string(what) + ": empty input");
  return t.shape().back();
}

}  // namespace

std::size_t conv_output_dim(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (kernel > in)
    throw std::invalid_argument("conv2d: kernel " + std::to_string(kernel) + " larger than input " + std::to_string(in));
  return (in - kernel) / stride + 1;
}

std::size_t pool_output_dim(std::size_t in, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw std::invalid_argument("maxpool2d: zero window or stride");
  if (window > in)
    throw std::invalid_argument("maxpool2d: window " + std::to_string(window) + " larger than input " +
                                std::to_string(in));
  return (in - window) / stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias, Stride2 stride,
                 Padding padding) {
  const ConvGeometry g = conv_geometry(input, weights, bias, stride, padding);
  Tensor<T> out({g.out_h, g.out_w, g.out_c});
  MatrixMap<T> out_m(out.raw(), static_cast<Eigen::Index>(g.positions()), static_cast<Eigen::Index>(g.out_c));
  ConstMatrixMap<T> w_m(weights.raw(), static_cast<Eigen::Index>(g.patch()), static_cast<Eigen::Index>(g.out_c));
  if (g.is_pointwise()) {
    ConstMatrixMap<T> in_m(input.raw(), static_cast<Eigen::Index>(g.positions()), static_cast<Eigen::Index>(g.in_c));
    out_m.noalias() = in_m * w_m;
  } else {
    const RowMatrix<T> cols = im2col(input, g);
    out_m.noalias() = cols * w_m;
  }
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b_v(bias.raw(), static_cast<Eigen::Index>(g.out_c));
  out_m.rowwise() += b_v;
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_output, Stride2 stride,
                     Padding padding, Tensor<T>* grad_input, Tensor<T>& grad_weights, Tensor<T>& grad_bias) {
  const Tensor<T> bias_shape_probe({weights.dim(3)});
  const ConvGeometry g = conv_geometry(input, weights, bias_shape_probe, stride, padding);
  require_same_shape(grad_output.shape(), {g.out_h, g.out_w, g.out_c}, "conv2d_backward grad_output");
  require_same_shape(grad_weights.shape(), weights.shape(), "conv2d_backward grad_weights");
  require_same_shape(grad_bias.shape(), {g.out_c}, "conv2d_backward grad_bias");

  const auto P = static_cast<Eigen::Index>(g.positions());
  const auto K = static_cast<Eigen::Index>(g.patch());
  const auto C = static_cast<Eigen::Index>(g.out_c);
  ConstMatrixMap<T> gout(grad_output.raw(), P, C);
  ConstMatrixMap<T> w_m(weights.raw(), K, C);
  MatrixMap<T> gw(grad_weights.raw(), K, C);
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(grad_bias.raw(), C);
  gb += gout.colwise().sum();

  if (g.is_pointwise()) {
    ConstMatrixMap<T> in_m(input.raw(), P, K);
    gw.noalias() += in_m.transpose() * gout;
    if (grad_input) {
      *grad_input = Tensor<T>(input.shape());
      MatrixMap<T> gin(grad_input->raw(), P, K);
      gin.noalias() = gout * w_m.transpose();
    }
    return;
  }
  const RowMatrix<T> cols = im2col(input, g);
  gw.noalias() += cols.transpose() * gout;
  if (grad_input) {
    RowMatrix<T> gcols = gout * w_m.transpose();
    *grad_input = Tensor<T>(input.shape());
    col2im_add(gcols, g, *grad_input);
  }
}

template <typename T>
Tensor<T> route_backward(const Tensor<T>& grad_output, std::span<const std::uint32_t> source,
                         const Shape& input_shape) {
  if (grad_output.size() != source.size())
    throw std::invalid_argument("route_backward: gradient size does not match routing table");
  Tensor<T> grad(input_shape);
  for (std::size_t i = 0; i < source.size(); ++i) grad[source[i]] += grad_output[i];
  return grad;
}

template <typename T>
Routed<T> maxpool2d(const Tensor<T>& input, Window2 window, Stride2 stride) {
  if (input.rank() != 3) throw std::invalid_argument("maxpool2d: expected [H,W,C], got " + shape_string(input.shape()));
  const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
  const std::size_t out_h = pool_output_dim(H, window.rows, stride.rows);
  const std::size_t out_w = pool_output_dim(W, window.cols, stride.cols);
  Routed<T> r{Tensor<T>({out_h, out_w, C}), std::vector<std::uint32_t>(out_h * out_w * C)};
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = ((oy * stride.rows) * W + ox * stride.cols) * C + c;
        for (std::size_t wy = 0; wy < window.rows; ++wy) {
          for (std::size_t wx = 0; wx < window.cols; ++wx) {
            const std::size_t idx = ((oy * stride.rows + wy) * W + ox * stride.cols + wx) * C + c;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (oy * out_w + ox) * C + c;
        r.output[o] = input[best];
        r.source[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
Routed<T> mfm_halves(const Tensor<T>& input) {
  const std::size_t C = channels_of(input, "mfm_halves");
  if (C % 2 != 0) throw std::invalid_argument("mfm_halves: channel count " + std::to_string(C) + " is odd");
  const std::size_t k = C / 2;
  const std::size_t pixels = input.size() / C;
  Shape shape = input.shape();
  shape.back() = k;
  Routed<T> r{Tensor<T>(shape), std::vector<std::uint32_t>(pixels * k)};
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t a = p * C + c;
      const std::size_t b = a + k;
      const std::size_t pick = input[b] > input[a] ? b : a;
      r.output[p * k + c] = input[pick];
      r.source[p * k + c] = static_cast<std::uint32_t>(pick);
    }
  }
  return r;
}

template <typename T>
Routed<T> mfm_thirds(const Tensor<T>& input) {
  const std::size_t C = channels_of(input, "mfm_thirds");
  if (C % 3 != 0)
    throw std::invalid_argument("mfm_thirds: channel count " + std::to_string(C) + " not divisible by 3");
  const std::size_t k = C / 3;
  const std::size_t pixels = input.size() / C;
  Shape shape = input.shape();
  shape.back() = 2 * k;
  Routed<T> r{Tensor<T>(shape), std::vector<std::uint32_t>(pixels * 2 * k)};
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t idx[3] = {p * C + c, p * C + c + k, p * C + c + 2 * k};
      // Stable descending order: equal values keep group order.
      if (input[idx[1]] > input[idx[0]]) std::swap(idx[0], idx[1]);
      if (input[idx[2]] > input[idx[1]]) {
        std::swap(idx[1], idx[2]);
        if (input[idx[1]] > input[idx[0]]) std::swap(idx[0], idx[1]);
      }
      const std::size_t out_max = p * 2 * k + c;
      const std::size_t out_med = out_max + k;
      r.output[out_max] = input[idx[0]];
      r.source[out_max] = static_cast<std::uint32_t>(idx[0]);
      r.output[out_med] = input[idx[1]];
      r.source[out_med] = static_cast<std::uint32_t>(idx[1]);
    }
  }
  return r;
}

template <typename T>
Tensor<T> fully_connected(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  if (weights.rank() != 2 || bias.rank() != 1 || weights.dim(0) != input.size() || weights.dim(1) != bias.dim(0))
    throw std::invalid_argument("fully_connected: input of " + std::to_string(input.size()) + " values, weights " +
                                shape_string(weights.shape()) + ", bias " + shape_string(bias.shape()));
  const auto n = static_cast<Eigen::Index>(weights.dim(0));
  const auto m = static_cast<Eigen::Index>(weights.dim(1));
  Tensor<T> out({weights.dim(1)});
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> y(out.raw(), m);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> x(input.raw(), n);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.raw(), m);
  ConstMatrixMap<T> w(weights.raw(), n, m);
  y.noalias() = x * w;
  y += b;
  return out;
}

template <typename T>
Tensor<T> fully_connected_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_output,
                                   Tensor<T>& grad_weights, Tensor<T>& grad_bias) {
  if (weights.rank() != 2 || weights.dim(0) != input.size() || grad_output.size() != weights.dim(1))
    throw std::invalid_argument("fully_connected_backward: shape mismatch");
  require_same_shape(grad_weights.shape(), weights.shape(), "fully_connected_backward grad_weights");
  require_same_shape(grad_bias.shape(), {weights.dim(1)}, "fully_connected_backward grad_bias");
  const auto n = static_cast<Eigen::Index>(weights.dim(0));
  const auto m = static_cast<Eigen::Index>(weights.dim(1));
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> x(input.raw(), n);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> g(grad_output.raw(), m);
  ConstMatrixMap<T> w(weights.raw(), n, m);
  MatrixMap<T> gw(grad_weights.raw(), n, m);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(grad_bias.raw(), m);
  gw.noalias() += x * g.transpose();
  gb += g;
  Tensor<T> grad_input(input.shape());
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gx(grad_input.raw(), n);
  gx.noalias() = w * g;
  return grad_input;
}

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  if (!training || rate == 0.0) return {input, {}};
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  DropoutResult<T> r{Tensor<T>(input.shape()), std::vector<T>(input.size())};
  for (std::size_t i = 0; i < input.size(); ++i) {
    r.scale[i] = rng.uniform() < rate ? T(0) : keep_scale;
    r.output[i] = input[i] * r.scale[i];
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_output, std::span<const T> scale) {
  if (scale.empty()) return grad_output;
  if (scale.size() != grad_output.size()) throw std::invalid_argument("dropout_backward: mask size mismatch");
  Tensor<T> g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale[i];
  return g;
}

template <typename T>
LossAndGrad<T> softmax_cross_entropy(std::span<const T> logits, std::size_t target) {
  if (target >= logits.size())
    throw std::invalid_argument("softmax_cross_entropy: target " + std::to_string(target) + " outside [0, " +
                                std::to_string(logits.size()) + ")");
  double mx = -std::numeric_limits<double>::infinity();
  for (T v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  std::vector<double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += e[i];
  }
  LossAndGrad<T> r;
  r.loss = std::log(sum) - (static_cast<double>(logits[target]) - mx);
  r.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    r.grad[i] = static_cast<T>(e[i] / sum - (i == target ? 1.0 : 0.0));
  return r;
}

template <typename T>
AdamState<T> make_adam_state(std::span<const Tensor<T>> params, AdamOptions options) {
  AdamState<T> s;
  s.options = options;
  for (const auto& p : params) {
    s.m.emplace_back(p.shape());
    s.v.emplace_back(p.shape());
  }
  return s;
}

template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<const Tensor<T>> grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i].shape(), grads[i].shape(), "adam_step gradient");
    require_same_shape(params[i].shape(), state.m[i].shape(), "adam_step state");
  }
  const AdamOptions& o = state.options;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = params[i];
    const Tensor<T>& g = grads[i];
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
      const double vj = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      p[j] = static_cast<T>(p[j] - o.learning_rate * (mj / c1) / (std::sqrt(vj / c2) + o.epsilon));
    }
  }
}

#define ANTISPOOF_INSTANTIATE_LAYERS(T)                                                                          \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Stride2, Padding);        \
  template void conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Stride2, Padding,      \
                                   Tensor<T>*, Tensor<T>&, Tensor<T>&);                                        \
  template Tensor<T> route_backward<T>(const Tensor<T>&, std::span<const std::uint32_t>, const Shape&);         \
  template Routed<T> maxpool2d<T>(const Tensor<T>&, Window2, Stride2);                                          \
  template Routed<T> mfm_halves<T>(const Tensor<T>&);                                                           \
  template Routed<T> mfm_thirds<T>(const Tensor<T>&);                                                           \
  template Tensor<T> fully_connected<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> fully_connected_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                                 Tensor<T>&, Tensor<T>&);                                       \
  template DropoutResult<T> dropout<T>(const Tensor<T>&, double, bool, Rng&);                                   \
  template Tensor<T> dropout_backward<T>(const Tensor<T>&, std::span<const T>);                                 \
  template LossAndGrad<T> softmax_cross_entropy<T>(std::span<const T>, std::size_t);                            \
  template AdamState<T> make_adam_state<T>(std::span<const Tensor<T>>, AdamOptions);                            \
  template void adam_step<T>(std::span<Tensor<T>>, std::span<const Tensor<T>>, AdamState<T>&);

ANTISPOOF_INSTANTIATE_LAYERS(float)
ANTISPOOF_INSTANTIATE_LAYERS(double)

#undef ANTISPOOF_INSTANTIATE_LAYERS

}  // namespace antispoof
