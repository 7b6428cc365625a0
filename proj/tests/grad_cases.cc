#include "grad_cases.h"

#include <algorithm>
#include <numeric>

#include "antispoof/grad_check.h"
#include "antispoof/layers.h"
#include "antispoof/model.h"
#include "test_support.h"

namespace antispoof::testing {

namespace {

// Flattens tensors into one coordinate vector and back.
struct Packed {
  std::vector<Shape> shapes;
  std::vector<double> values;

  explicit Packed(const std::vector<TensorD>& ts) {
    for (const auto& t : ts) {
      shapes.push_back(t.shape());
      values.insert(values.end(), t.vec().begin(), t.vec().end());
    }
  }
  std::vector<TensorD> unpack(std::span<const double> v) const {
    std::vector<TensorD> out;
    std::size_t off = 0;
    for (const auto& s : shapes) {
      const std::size_t n = shape_size(s);
      out.emplace_back(s, std::vector<double>(v.begin() + off, v.begin() + off + n));
      off += n;
    }
    return out;
  }
};

double dot(const TensorD& a, const TensorD& b) {
  return std::inner_product(a.vec().begin(), a.vec().end(), b.vec().begin(), 0.0);
}

bool separated(const TensorD& t, const std::vector<std::vector<std::size_t>>& groups, double gap) {
  for (const auto& g : groups)
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = i + 1; j < g.size(); ++j)
        if (std::abs(t.vec()[g[i]] - t.vec()[g[j]]) < gap) return false;
  return true;
}

template <typename Op>
double routed_case(Rng& rng, const Shape& shape, Op op, const std::vector<std::vector<std::size_t>>& groups) {
  TensorD x;
  do {
    x = random_tensor(shape, rng);
  } while (!separated(x, groups, 1e-3));
  const auto fwd = op(x);
  const TensorD r = random_tensor(fwd.output.shape(), rng);
  const TensorD gx = route_backward(r, fwd.source, x.shape());
  auto loss = [&](std::span<const double> v) { return dot(op(TensorD(x.shape(), {v.begin(), v.end()})).output, r); };
  return grad_check(loss, x.vec(), gx.vec()).max_relative_error;
}

std::vector<std::vector<std::size_t>> channel_groups(const Shape& shape, std::size_t group) {
  const std::size_t C = shape.back(), k = C / group;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t p = 0; p < shape_size(shape) / C; ++p)
    for (std::size_t c = 0; c < k; ++c) {
      out.emplace_back();
      for (std::size_t g = 0; g < group; ++g) out.back().push_back(p * C + g * k + c);
    }
  return out;
}

}  // namespace

double conv2d_grad_case(Rng& rng) {
  const std::size_t H = 3 + rng.below(6), W = 3 + rng.below(6), cin = 1 + rng.below(3), cout = 1 + rng.below(4);
  const std::size_t k = std::min<std::size_t>({1 + 2 * rng.below(3), H, W});
  const Stride2 stride{1 + rng.below(2), 1 + rng.below(2)};
  const Padding pad = rng.below(2) ? Padding::kSame : Padding::kValid;
  const TensorD x = random_tensor({H, W, cin}, rng), w = random_tensor({k, k, cin, cout}, rng),
                b = random_tensor({cout}, rng);
  const TensorD r = random_tensor(conv2d(x, w, b, stride, pad).shape(), rng);
  TensorD gx(x.shape()), gw(w.shape()), gb(b.shape());
  conv2d_backward(x, w, r, stride, pad, &gx, gw, gb);
  const Packed point({x, w, b});
  auto loss = [&](std::span<const double> v) {
    const auto t = point.unpack(v);
    return dot(conv2d(t[0], t[1], t[2], stride, pad), r);
  };
  return grad_check(loss, point.values, Packed({gx, gw, gb}).values).max_relative_error;
}

double fully_connected_grad_case(Rng& rng) {
  const std::size_t n = 1 + rng.below(30), m = 1 + rng.below(15);
  const TensorD x = random_tensor({n}, rng), w = random_tensor({n, m}, rng), b = random_tensor({m}, rng);
  const TensorD r = random_tensor({m}, rng);
  TensorD gw(w.shape()), gb(b.shape());
  const TensorD gx = fully_connected_backward(x, w, r, gw, gb);
  const Packed point({x, w, b});
  auto loss = [&](std::span<const double> v) {
    const auto t = point.unpack(v);
    return dot(fully_connected(t[0], t[1], t[2]), r);
  };
  return grad_check(loss, point.values, Packed({gx, gw, gb}).values).max_relative_error;
}

double softmax_grad_case(Rng& rng) {
  const std::size_t n = 2 + rng.below(10);
  std::vector<double> z(n);
  for (auto& v : z) v = rng.uniform(-5, 5);
  const std::size_t target = rng.below(n);
  const auto r = softmax_cross_entropy<double>(z, target);
  auto loss = [&](std::span<const double> v) { return softmax_cross_entropy<double>(v, target).loss; };
  return grad_check(loss, z, r.grad).max_relative_error;
}

double maxpool_grad_case(Rng& rng) {
  const std::size_t H = 2 + rng.below(7), W = 2 + rng.below(7), C = 1 + rng.below(3);
  const Window2 win{1 + rng.below(std::min<std::size_t>(H, 3)), 1 + rng.below(std::min<std::size_t>(W, 3))};
  const Stride2 stride{1 + rng.below(2), 1 + rng.below(2)};
  std::vector<std::vector<std::size_t>> all(1, std::vector<std::size_t>(H * W * C));
  std::iota(all[0].begin(), all[0].end(), 0);
  return routed_case(rng, {H, W, C}, [&](const TensorD& x) { return maxpool2d(x, win, stride); }, all);
}

double mfm_halves_grad_case(Rng& rng) {
  const Shape s = {1 + rng.below(4), 1 + rng.below(4), 2 * (1 + rng.below(4))};
  return routed_case(rng, s, [](const TensorD& x) { return mfm_halves(x); }, channel_groups(s, 2));
}

double mfm_thirds_grad_case(Rng& rng) {
  const Shape s = {1 + rng.below(4), 1 + rng.below(4), 3 * (1 + rng.below(4))};
  return routed_case(rng, s, [](const TensorD& x) { return mfm_thirds(x); }, channel_groups(s, 3));
}

double tiny_model_grad_case(std::uint64_t seed) {
  ArchConfig arch;
  arch.input_frames = 32;
  arch.input_bins = 17;
  arch.width_divisor = 4;
  ModelParams<double> params = build_lcnn<double>(arch, seed);
  Rng data(derive_seed(seed, {1}));
  // Head weights large enough that the trunk receives ordinary gradients but
  // small enough that no softmax saturates: the codes here are O(10), so
  // these give O(1) logits. Saturated heads push gradients below the
  // central-difference rounding floor.
  for (std::size_t h = 0; h < kNumHeads; ++h)
    for (auto& v : params.params[params.head_param[h]].value.vec()) v = data.uniform(-0.03, 0.03);
  const TensorD x = random_tensor({32, 17, 1}, data, 2.0);
  Targets t;
  for (std::size_t h = 0; h < kNumHeads; ++h) t.index[h] = data.below(kHeadSizes[h]);

  auto objective = [&](const ModelParams<double>& p, ForwardCache<double>* cache) {
    Rng dropout_rng(derive_seed(seed, {2}));
    return multitask_loss(forward(p, x, true, dropout_rng, cache).logits, t);
  };
  ForwardCache<double> cache;
  const auto loss = objective(params, &cache);
  auto grads = params.zeros_like();
  backward(params, cache, loss.head_grads, grads);

  std::vector<double> point, analytic;
  for (std::size_t i = 0; i < params.params.size(); ++i) {
    point.insert(point.end(), params.params[i].value.vec().begin(), params.params[i].value.vec().end());
    analytic.insert(analytic.end(), grads[i].vec().begin(), grads[i].vec().end());
  }
  ModelParams<double> probe = params;
  auto fn = [&](std::span<const double> v) {
    std::size_t off = 0;
    for (auto& p : probe.params) {
      std::copy_n(v.begin() + off, p.value.size(), p.value.vec().begin());
      off += p.value.size();
    }
    return objective(probe, nullptr).total;
  };
  return grad_check(fn, point, analytic).max_relative_error;
}

}  // namespace antispoof::testing
