#include "binecg/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "binecg/bits.hpp"
#include "binecg/errors.hpp"

namespace binecg {

namespace {

using Index = std::ptrdiff_t;

// Output positions p whose tap t lands inside the input: 0 <= p*s + t - pad < L.
struct TapRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

TapRange tap_range(std::size_t tap, std::size_t input_length, std::size_t output_length,
                   const ConvGeometry& g) {
  const Index s = static_cast<Index>(g.stride);
  const Index off = static_cast<Index>(tap) - static_cast<Index>(g.padding);
  const Index L = static_cast<Index>(input_length);
  Index lo = off >= 0 ? 0 : (-off + s - 1) / s;
  Index hi_incl = (L - 1 - off) >= 0 ? (L - 1 - off) / s : -1;
  hi_incl = std::min<Index>(hi_incl, static_cast<Index>(output_length) - 1);
  if (hi_incl < lo) return {};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi_incl + 1)};
}

void require_channels(const Batch& input, std::size_t expected, const char* layer) {
  if (input.channels() != expected) {
    throw std::invalid_argument(std::string(layer) + ": expected " + std::to_string(expected) +
                                " input channels, got " + std::to_string(input.channels()));
  }
}

template <typename Cache>
void require_cache(const Cache& cache, const char* layer) {
  if (!cache) {
    throw StateError(std::string(layer) + ": backward called without a train-mode forward");
  }
}

void require_infer(const ForwardContext& ctx, const char* layer) {
  if (ctx.mode != Mode::Infer) {
    throw StateError(std::string(layer) + ": evaluate() is infer-only; use forward() to train");
  }
}

}  // namespace

Tensor1D sign_binarize(const Tensor1D& x, std::span<const float> alpha) {
  if (!alpha.empty() && alpha.size() != x.channels()) {
    throw std::invalid_argument("sign_binarize: threshold count does not match channels");
  }
  Tensor1D out(x.channels(), x.length());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const Real a = alpha.empty() ? 0.0 : alpha[c];
    for (std::size_t i = 0; i < x.length(); ++i) out(c, i) = sign_binarize(x(c, i), a);
  }
  return out;
}

Real ste_surrogate(Real x, SteKind kind) noexcept {
  if (kind == SteKind::TanhGrad) return std::tanh(x);
  if (x < -1.0) return -1.0;
  if (x < 0.0) return 2.0 * x + x * x;
  if (x <= 1.0) return 2.0 * x - x * x;
  return 1.0;
}

Real ste_gradient(Real x, SteKind kind) noexcept {
  if (kind == SteKind::TanhGrad) {
    const Real t = std::tanh(x);
    return 1.0 - t * t;
  }
  if (x >= -1.0 && x < 0.0) return 2.0 + 2.0 * x;
  if (x >= 0.0 && x <= 1.0) return 2.0 - 2.0 * x;
  return 0.0;
}

// ---------------------------------------------------------------------------
// Conv1d

std::size_t ConvGeometry::output_length(std::size_t input_length) const {
  const Index span = static_cast<Index>(input_length) + 2 * static_cast<Index>(padding) -
                     static_cast<Index>(kernel);
  if (input_length == 0 || span < 0) {
    throw ShapeError("conv1d: kernel " + std::to_string(kernel) + " does not fit input length " +
                     std::to_string(input_length) + " with padding " + std::to_string(padding));
  }
  return static_cast<std::size_t>(span) / stride + 1;
}

Conv1d::Conv1d(ConvGeometry geometry, bool binarized, SteKind ste, bool binary_input)
    : geom_(geometry),
      binarized_(binarized),
      ste_(ste),
      binary_input_(binarized && binary_input),
      weights_(geometry.weight_count(), 0.0f),
      grad_(geometry.weight_count(), 0.0) {
  if (geom_.in_channels == 0 || geom_.out_channels == 0 || geom_.kernel == 0 ||
      geom_.stride == 0) {
    throw std::invalid_argument("conv1d: channels, kernel and stride must be positive");
  }
}

std::vector<Real> Conv1d::effective_weights(SignMode sign) const {
  std::vector<Real> w(weights_.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Real v = weights_[i];
    if (!binarized_) {
      w[i] = v;
    } else {
      w[i] = sign == SignMode::Hard ? sign_binarize(v) : ste_surrogate(v, ste_);
    }
  }
  return w;
}

Batch Conv1d::run_reference(const Batch& input, std::span<const Real> w) const {
  const std::size_t L = input.length();
  const std::size_t Lo = geom_.output_length(L);
  const std::size_t K = geom_.kernel;
  const std::size_t s = geom_.stride;
  Batch out(input.batch(), geom_.out_channels, Lo);
  std::vector<TapRange> ranges(K);
  for (std::size_t t = 0; t < K; ++t) ranges[t] = tap_range(t, L, Lo, geom_);

  for (std::size_t n = 0; n < input.batch(); ++n) {
    for (std::size_t o = 0; o < geom_.out_channels; ++o) {
      Real* y = out.row(n, o).data();
      for (std::size_t c = 0; c < geom_.in_channels; ++c) {
        const Real* x = input.row(n, c).data();
        const Real* wk = w.data() + (o * geom_.in_channels + c) * K;
        for (std::size_t t = 0; t < K; ++t) {
          const Real wt = wk[t];
          const std::size_t pad = geom_.padding;
          for (std::size_t p = ranges[t].begin; p < ranges[t].end; ++p) {
            y[p] += wt * x[p * s + t - pad];
          }
        }
      }
    }
  }
  return out;
}

// Binary weights against real input: each tap adds or subtracts the input in
// the same order as the reference kernel, so results agree bit for bit.
Batch Conv1d::run_packed_real_input(const Batch& input) const {
  const std::size_t L = input.length();
  const std::size_t Lo = geom_.output_length(L);
  const std::size_t K = geom_.kernel;
  const std::size_t s = geom_.stride;
  const std::size_t row_bits = geom_.in_channels * K;

  PackedBitTensor wbits(geom_.out_channels, row_bits);
  for (std::size_t o = 0; o < geom_.out_channels; ++o) {
    for (std::size_t i = 0; i < row_bits; ++i) {
      wbits.set_bit(o, i, weights_[o * row_bits + i] >= 0.0f);
    }
  }
  std::vector<TapRange> ranges(K);
  for (std::size_t t = 0; t < K; ++t) ranges[t] = tap_range(t, L, Lo, geom_);

  Batch out(input.batch(), geom_.out_channels, Lo);
  for (std::size_t n = 0; n < input.batch(); ++n) {
    for (std::size_t o = 0; o < geom_.out_channels; ++o) {
      Real* y = out.row(n, o).data();
      for (std::size_t c = 0; c < geom_.in_channels; ++c) {
        const Real* x = input.row(n, c).data();
        for (std::size_t t = 0; t < K; ++t) {
          const std::size_t pad = geom_.padding;
          if (wbits.bit(o, c * K + t)) {
            for (std::size_t p = ranges[t].begin; p < ranges[t].end; ++p) y[p] += x[p * s + t - pad];
          } else {
            for (std::size_t p = ranges[t].begin; p < ranges[t].end; ++p) y[p] -= x[p * s + t - pad];
          }
        }
      }
    }
  }
  return out;
}

// Bipolar weights against bipolar input. Activations are packed position-major
// (one row of in_channels bits per position) and weights per (out, tap), so
// each output is a sum of XNOR/popcount dots over the taps that fall inside
// the input; zero padding contributes nothing.
Batch Conv1d::run_packed_binary_input(const Batch& input) const {
  const std::size_t L = input.length();
  const std::size_t Lo = geom_.output_length(L);
  const std::size_t K = geom_.kernel;
  const std::size_t Cin = geom_.in_channels;
  const std::size_t s = geom_.stride;

  PackedBitTensor wbits(geom_.out_channels * K, Cin);
  for (std::size_t o = 0; o < geom_.out_channels; ++o) {
    for (std::size_t c = 0; c < Cin; ++c) {
      for (std::size_t t = 0; t < K; ++t) {
        wbits.set_bit(o * K + t, c, weights_[(o * Cin + c) * K + t] >= 0.0f);
      }
    }
  }
  std::vector<TapRange> ranges(K);
  for (std::size_t t = 0; t < K; ++t) ranges[t] = tap_range(t, L, Lo, geom_);

  Batch out(input.batch(), geom_.out_channels, Lo);
  PackedBitTensor xbits(L, Cin);
  for (std::size_t n = 0; n < input.batch(); ++n) {
    std::fill(xbits.words().begin(), xbits.words().end(), Word{0});
    for (std::size_t c = 0; c < Cin; ++c) {
      const auto x = input.row(n, c);
      for (std::size_t q = 0; q < L; ++q) {
        if (x[q] == 1.0) {
          xbits.set_bit(q, c, true);
        } else if (x[q] != -1.0) {
          throw std::invalid_argument("conv1d: packed kernel requires bipolar input, channel " +
                                      std::to_string(c) + " position " + std::to_string(q) +
                                      " holds " + std::to_string(x[q]));
        }
      }
    }
    for (std::size_t o = 0; o < geom_.out_channels; ++o) {
      Real* y = out.row(n, o).data();
      for (std::size_t t = 0; t < K; ++t) {
        const PackedRowView wrow = wbits.row(o * K + t);
        for (std::size_t p = ranges[t].begin; p < ranges[t].end; ++p) {
          y[p] += static_cast<Real>(
              xnor_popcount_dot(wrow, xbits.row(p * s + t - geom_.padding), Cin));
        }
      }
    }
  }
  return out;
}

Batch Conv1d::run(const Batch& input, const ForwardContext& ctx) const {
  require_channels(input, geom_.in_channels, "conv1d");
  const bool packed = binarized_ && ctx.mode == Mode::Infer && ctx.kernel == BinaryKernel::Packed &&
                      ctx.sign == SignMode::Hard;
  if (packed) {
    return binary_input_ ? run_packed_binary_input(input) : run_packed_real_input(input);
  }
  const auto w = effective_weights(ctx.sign);
  return run_reference(input, w);
}

Batch Conv1d::forward(const Batch& input, const ForwardContext& ctx) {
  Batch out = run(input, ctx);
  if (ctx.mode == Mode::Train) {
    cached_input_ = input;
    cached_sign_ = ctx.sign;
  }
  return out;
}

Batch Conv1d::evaluate(const Batch& input, const ForwardContext& ctx) const {
  require_infer(ctx, "conv1d");
  return run(input, ctx);
}

Batch Conv1d::backward(const Batch& grad_output) {
  require_cache(cached_input_, "conv1d");
  const Batch& x = *cached_input_;
  const std::size_t L = x.length();
  const std::size_t Lo = geom_.output_length(L);
  if (grad_output.batch() != x.batch() || grad_output.channels() != geom_.out_channels ||
      grad_output.length() != Lo) {
    throw std::invalid_argument("conv1d: gradient shape does not match the cached forward");
  }
  const std::size_t K = geom_.kernel;
  const std::size_t s = geom_.stride;
  const auto w = effective_weights(cached_sign_);
  std::vector<Real> gw(w.size(), 0.0);
  Batch gx(x.batch(), geom_.in_channels, L);
  std::vector<TapRange> ranges(K);
  for (std::size_t t = 0; t < K; ++t) ranges[t] = tap_range(t, L, Lo, geom_);

  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t o = 0; o < geom_.out_channels; ++o) {
      const Real* g = grad_output.row(n, o).data();
      for (std::size_t c = 0; c < geom_.in_channels; ++c) {
        const Real* xr = x.row(n, c).data();
        Real* gxr = gx.row(n, c).data();
        const std::size_t base = (o * geom_.in_channels + c) * K;
        for (std::size_t t = 0; t < K; ++t) {
          const Real wt = w[base + t];
          const std::size_t pad = geom_.padding;
          Real acc = 0.0;
          for (std::size_t p = ranges[t].begin; p < ranges[t].end; ++p) {
            const std::size_t q = p * s + t - pad;
            acc += g[p] * xr[q];
            gxr[q] += wt * g[p];
          }
          gw[base + t] += acc;
        }
      }
    }
  }
  for (std::size_t i = 0; i < gw.size(); ++i) {
    grad_[i] += binarized_ ? gw[i] * ste_gradient(weights_[i], ste_) : gw[i];
  }
  return gx;
}

void Conv1d::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

void Conv1d::collect_params(std::vector<ParamView>& out) {
  out.push_back({ParamRole::Weight, weights_, grad_, binarized_, geom_.in_channels * geom_.kernel});
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in_features, std::size_t out_features, bool binarized, SteKind ste,
             bool binary_input)
    : conv_(ConvGeometry{in_features, out_features, 1, 1, 0}, binarized, ste, binary_input) {}

Batch Dense::forward(const Batch& input, const ForwardContext& ctx) {
  if (input.sample_size() != in_features()) {
    throw std::invalid_argument("dense: expected " + std::to_string(in_features()) +
                                " input features, got " + std::to_string(input.sample_size()));
  }
  in_channels_ = input.channels();
  in_length_ = input.length();
  return conv_.forward(input.flattened(), ctx);
}

Batch Dense::evaluate(const Batch& input, const ForwardContext& ctx) const {
  if (input.sample_size() != in_features()) {
    throw std::invalid_argument("dense: expected " + std::to_string(in_features()) +
                                " input features, got " + std::to_string(input.sample_size()));
  }
  return conv_.evaluate(input.flattened(), ctx);
}

Batch Dense::backward(const Batch& grad_output) {
  return conv_.backward(grad_output).reshaped(in_channels_, in_length_);
}

// ---------------------------------------------------------------------------
// MaxPool1d

MaxPool1d::MaxPool1d(std::size_t kernel, std::size_t stride) : kernel_(kernel), stride_(stride) {
  if (kernel == 0 || stride == 0) {
    throw std::invalid_argument("maxpool1d: kernel and stride must be positive");
  }
}

std::size_t MaxPool1d::output_length(std::size_t input_length) const {
  if (input_length < kernel_) {
    throw ShapeError("maxpool1d: window " + std::to_string(kernel_) +
                     " is larger than input length " + std::to_string(input_length));
  }
  return (input_length - kernel_) / stride_ + 1;
}

Batch MaxPool1d::run(const Batch& input, std::vector<std::uint32_t>* argmax) const {
  const std::size_t Lo = output_length(input.length());
  Batch out(input.batch(), input.channels(), Lo);
  if (argmax) argmax->assign(out.size(), 0);
  std::size_t k = 0;
  for (std::size_t n = 0; n < input.batch(); ++n) {
    for (std::size_t c = 0; c < input.channels(); ++c) {
      const auto x = input.row(n, c);
      auto y = out.row(n, c);
      for (std::size_t p = 0; p < Lo; ++p, ++k) {
        std::size_t best = p * stride_;
        for (std::size_t i = best + 1; i < p * stride_ + kernel_; ++i) {
          if (x[i] > x[best]) best = i;
        }
        y[p] = x[best];
        if (argmax) (*argmax)[k] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

Batch MaxPool1d::forward(const Batch& input, const ForwardContext& ctx) {
  if (ctx.mode != Mode::Train) return run(input, nullptr);
  Batch out = run(input, &argmax_);
  cached_input_length_ = input.length();
  has_cache_ = true;
  return out;
}

Batch MaxPool1d::evaluate(const Batch& input, const ForwardContext& ctx) const {
  require_infer(ctx, "maxpool1d");
  return run(input, nullptr);
}

Batch MaxPool1d::backward(const Batch& grad_output) const {
  if (!has_cache_) throw StateError("maxpool1d: backward called without a train-mode forward");
  if (grad_output.size() != argmax_.size()) {
    throw std::invalid_argument("maxpool1d: gradient shape does not match the cached forward");
  }
  Batch gx(grad_output.batch(), grad_output.channels(), cached_input_length_);
  std::size_t k = 0;
  for (std::size_t n = 0; n < grad_output.batch(); ++n) {
    for (std::size_t c = 0; c < grad_output.channels(); ++c) {
      const auto g = grad_output.row(n, c);
      auto gr = gx.row(n, c);
      for (std::size_t p = 0; p < g.size(); ++p, ++k) gr[argmax_[k]] += g[p];
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(std::size_t channels, Real epsilon, Real momentum)
    : epsilon_(epsilon),
      momentum_(momentum),
      gamma_(channels, 1.0f),
      beta_(channels, 0.0f),
      running_mean_(channels, 0.0f),
      running_var_(channels, 1.0f),
      gamma_grad_(channels, 0.0),
      beta_grad_(channels, 0.0) {
  if (channels == 0) throw std::invalid_argument("batchnorm1d: channels must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("batchnorm1d: epsilon must be positive");
  if (!(momentum > 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("batchnorm1d: momentum must lie in (0, 1)");
  }
}

Batch BatchNorm1d::normalize_with(const Batch& input, std::span<const Real> mean,
                                  std::span<const Real> inv_std) const {
  Batch out(input.batch(), input.channels(), input.length());
  for (std::size_t n = 0; n < input.batch(); ++n) {
    for (std::size_t c = 0; c < input.channels(); ++c) {
      const auto x = input.row(n, c);
      auto y = out.row(n, c);
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean[c]) * inv_std[c];
    }
  }
  return out;
}

Batch BatchNorm1d::forward(const Batch& input, const ForwardContext& ctx) {
  if (ctx.mode == Mode::Infer) return evaluate(input, ctx);
  require_channels(input, channels(), "batchnorm1d");
  const std::size_t count = input.batch() * input.length();
  if (count == 0) throw std::invalid_argument("batchnorm1d: empty batch in train mode");

  const std::size_t C = channels();
  std::vector<Real> mean(C, 0.0), var(C, 0.0), inv_std(C);
  for (std::size_t c = 0; c < C; ++c) {
    Real sum = 0.0;
    for (std::size_t n = 0; n < input.batch(); ++n) {
      for (Real v : input.row(n, c)) sum += v;
    }
    mean[c] = sum / static_cast<Real>(count);
    Real sq = 0.0;
    for (std::size_t n = 0; n < input.batch(); ++n) {
      for (Real v : input.row(n, c)) sq += (v - mean[c]) * (v - mean[c]);
    }
    var[c] = sq / static_cast<Real>(count);
    inv_std[c] = 1.0 / std::sqrt(var[c] + epsilon_);
  }

  Batch xhat = normalize_with(input, mean, inv_std);
  Batch out(input.batch(), C, input.length());
  for (std::size_t n = 0; n < input.batch(); ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const auto xh = xhat.row(n, c);
      auto y = out.row(n, c);
      const Real g = gamma_[c], b = beta_[c];
      for (std::size_t i = 0; i < xh.size(); ++i) y[i] = g * xh[i] + b;
    }
  }

  const Real unbias =
      count > 1 ? static_cast<Real>(count) / static_cast<Real>(count - 1) : 1.0;
  for (std::size_t c = 0; c < C; ++c) {
    running_mean_[c] = static_cast<float>((1.0 - momentum_) * running_mean_[c] + momentum_ * mean[c]);
    running_var_[c] =
        static_cast<float>((1.0 - momentum_) * running_var_[c] + momentum_ * var[c] * unbias);
  }
  cached_xhat_ = std::move(xhat);
  cached_inv_std_ = std::move(inv_std);
  return out;
}

Batch BatchNorm1d::evaluate(const Batch& input, const ForwardContext& ctx) const {
  require_infer(ctx, "batchnorm1d");
  require_channels(input, channels(), "batchnorm1d");
  const std::size_t C = channels();
  Batch out(input.batch(), C, input.length());
  for (std::size_t c = 0; c < C; ++c) {
    const Real inv_std = 1.0 / std::sqrt(static_cast<Real>(running_var_[c]) + epsilon_);
    const Real scale = gamma_[c] * inv_std;
    const Real mean = running_mean_[c];
    const Real b = beta_[c];
    for (std::size_t n = 0; n < input.batch(); ++n) {
      const auto x = input.row(n, c);
      auto y = out.row(n, c);
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean) * scale + b;
    }
  }
  return out;
}

Batch BatchNorm1d::backward(const Batch& grad_output) {
  require_cache(cached_xhat_, "batchnorm1d");
  const Batch& xhat = *cached_xhat_;
  if (grad_output.batch() != xhat.batch() || grad_output.channels() != xhat.channels() ||
      grad_output.length() != xhat.length()) {
    throw std::invalid_argument("batchnorm1d: gradient shape does not match the cached forward");
  }
  const std::size_t C = channels();
  const Real count = static_cast<Real>(xhat.batch() * xhat.length());
  Batch gx(xhat.batch(), C, xhat.length());
  for (std::size_t c = 0; c < C; ++c) {
    Real sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < xhat.batch(); ++n) {
      const auto g = grad_output.row(n, c);
      const auto xh = xhat.row(n, c);
      for (std::size_t i = 0; i < g.size(); ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
    }
    gamma_grad_[c] += sum_gx;
    beta_grad_[c] += sum_g;
    const Real k = gamma_[c] * cached_inv_std_[c] / count;
    for (std::size_t n = 0; n < xhat.batch(); ++n) {
      const auto g = grad_output.row(n, c);
      const auto xh = xhat.row(n, c);
      auto out = gx.row(n, c);
      for (std::size_t i = 0; i < g.size(); ++i) {
        out[i] = k * (count * g[i] - sum_g - xh[i] * sum_gx);
      }
    }
  }
  return gx;
}

void BatchNorm1d::zero_grad() {
  std::fill(gamma_grad_.begin(), gamma_grad_.end(), 0.0);
  std::fill(beta_grad_.begin(), beta_grad_.end(), 0.0);
}

void BatchNorm1d::collect_params(std::vector<ParamView>& out) {
  out.push_back({ParamRole::BnScale, gamma_, gamma_grad_, false, 0});
  out.push_back({ParamRole::BnShift, beta_, beta_grad_, false, 0});
}

// ---------------------------------------------------------------------------
// Relu

Batch Relu::forward(const Batch& input, const ForwardContext& ctx) {
  if (ctx.mode == Mode::Train) cached_input_ = input;
  Batch out = input;
  for (Real& v : out.data()) v = std::max(v, 0.0);
  return out;
}

Batch Relu::evaluate(const Batch& input, const ForwardContext& ctx) const {
  require_infer(ctx, "relu");
  Batch out = input;
  for (Real& v : out.data()) v = std::max(v, 0.0);
  return out;
}

Batch Relu::backward(const Batch& grad_output) const {
  require_cache(cached_input_, "relu");
  Batch gx = grad_output;
  const auto x = cached_input_->data();
  auto g = gx.data();
  if (g.size() != x.size()) throw std::invalid_argument("relu: gradient shape mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (x[i] <= 0.0) g[i] = 0.0;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// SignActivation

SignActivation::SignActivation(std::size_t channels, SteKind ste, ThresholdMode threshold)
    : ste_(ste),
      learnable_(threshold.learnable),
      alpha_(channels, threshold.learnable ? threshold.initial : 0.0f),
      alpha_grad_(channels, 0.0) {}

Batch SignActivation::evaluate(const Batch& input, const ForwardContext& ctx) const {
  require_infer(ctx, "sign");
  require_channels(input, channels(), "sign");
  Batch out(input.batch(), input.channels(), input.length());
  for (std::size_t n = 0; n < input.batch(); ++n) {
    for (std::size_t c = 0; c < input.channels(); ++c) {
      const auto x = input.row(n, c);
      auto y = out.row(n, c);
      const Real a = alpha_[c];
      if (ctx.sign == SignMode::Hard) {
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = sign_binarize(x[i], a);
      } else {
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = ste_surrogate(x[i] - a, ste_);
      }
    }
  }
  return out;
}

Batch SignActivation::forward(const Batch& input, const ForwardContext& ctx) {
  ForwardContext infer = ctx;
  infer.mode = Mode::Infer;
  Batch out = evaluate(input, infer);
  if (ctx.mode == Mode::Train) cached_input_ = input;
  return out;
}

Batch SignActivation::backward(const Batch& grad_output) {
  require_cache(cached_input_, "sign");
  const Batch& x = *cached_input_;
  if (grad_output.size() != x.size()) throw std::invalid_argument("sign: gradient shape mismatch");
  Batch gx(x.batch(), x.channels(), x.length());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const Real a = alpha_[c];
    Real sum = 0.0;
    for (std::size_t n = 0; n < x.batch(); ++n) {
      const auto xr = x.row(n, c);
      const auto g = grad_output.row(n, c);
      auto out = gx.row(n, c);
      for (std::size_t i = 0; i < xr.size(); ++i) {
        out[i] = g[i] * ste_gradient(xr[i] - a, ste_);
        sum += out[i];
      }
    }
    if (learnable_) alpha_grad_[c] -= sum;
  }
  return gx;
}

void SignActivation::zero_grad() { std::fill(alpha_grad_.begin(), alpha_grad_.end(), 0.0); }

void SignActivation::collect_params(std::vector<ParamView>& out) {
  if (learnable_) out.push_back({ParamRole::Threshold, alpha_, alpha_grad_, false, 0});
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(Real rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

Batch Dropout::forward(const Batch& input, const ForwardContext& ctx) {
  if (ctx.mode == Mode::Infer || rate_ == 0.0 || !ctx.dropout) {
    mask_.assign(input.size(), 1.0);
    has_cache_ = ctx.mode == Mode::Train;
    return input;
  }
  if (ctx.rng == nullptr) throw StateError("dropout: train mode requires a random stream");
  std::bernoulli_distribution keep(1.0 - rate_);
  const Real scale = 1.0 / (1.0 - rate_);
  mask_.resize(input.size());
  Batch out = input;
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = keep(*ctx.rng) ? scale : 0.0;
    y[i] *= mask_[i];
  }
  has_cache_ = true;
  return out;
}

Batch Dropout::evaluate(const Batch& input, const ForwardContext& ctx) const {
  require_infer(ctx, "dropout");
  return input;
}

Batch Dropout::backward(const Batch& grad_output) const {
  if (!has_cache_) throw StateError("dropout: backward called without a train-mode forward");
  if (grad_output.size() != mask_.size()) {
    throw std::invalid_argument("dropout: gradient shape mismatch");
  }
  Batch gx = grad_output;
  auto g = gx.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return gx;
}

// ---------------------------------------------------------------------------
// Functional forms

Tensor1D relu(const Tensor1D& x) {
  Tensor1D out = x;
  for (Real& v : out.data()) v = std::max(v, 0.0);
  return out;
}

Tensor1D dropout(const Tensor1D& x, Real rate, Mode mode, std::mt19937_64& rng) {
  Dropout layer(rate);
  Batch b = Batch::from_samples(std::span(&x, 1));
  ForwardContext ctx{mode, BinaryKernel::Reference, SignMode::Hard, &rng};
  return layer.forward(b, ctx).to_tensor(0);
}

Tensor1D maxpool1d(const Tensor1D& x, std::size_t kernel, std::size_t stride) {
  const MaxPool1d layer(kernel, stride);
  return layer.evaluate(Batch::from_samples(std::span(&x, 1)), ForwardContext{}).to_tensor(0);
}

}  // namespace binecg
