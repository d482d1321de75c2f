#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "binecg/tensor.hpp"

namespace binecg {

/// Surrogate whose derivative stands in for the derivative of Sign.
enum class SteKind : std::uint8_t { TanhGrad, PolyGrad };

/// Activation threshold used by Sign: fixed at zero, or one learnable value
/// per output channel.
struct ThresholdMode {
  bool learnable = false;
  float initial = 0.0f;

  static ThresholdMode fixed_zero() { return {}; }
  static ThresholdMode learnable_per_channel(float initial = 0.0f) { return {true, initial}; }

  friend bool operator==(const ThresholdMode&, const ThresholdMode&) = default;
};

enum class Mode { Train, Infer };

/// Kernel used for binarized layers at inference. Training always runs the
/// reference (real arithmetic) kernel.
enum class BinaryKernel { Packed, Reference };

/// Hard applies Sign; Smooth replaces Sign by its surrogate, which makes the
/// network differentiable for finite-difference checks.
enum class SignMode { Hard, Smooth };

struct ForwardContext {
  Mode mode = Mode::Infer;
  BinaryKernel kernel = BinaryKernel::Packed;
  SignMode sign = SignMode::Hard;
  std::mt19937_64* rng = nullptr;  // dropout stream; required in train mode
  bool dropout = true;             // false makes dropout the identity in train mode
};

/// +1 when x >= alpha, -1 otherwise.
constexpr Real sign_binarize(Real x, Real alpha = 0.0) noexcept { return x >= alpha ? 1.0 : -1.0; }

/// Channel-wise Sign with one threshold per channel (empty = all zero).
Tensor1D sign_binarize(const Tensor1D& x, std::span<const float> alpha);

/// tanh(x) for TanhGrad, the piecewise quadratic for PolyGrad.
Real ste_surrogate(Real x, SteKind kind) noexcept;

/// Derivative of ste_surrogate: 1 - tanh^2(x), or 2 + 2x on [-1, 0),
/// 2 - 2x on [0, 1] and 0 elsewhere.
Real ste_gradient(Real x, SteKind kind) noexcept;

enum class ParamRole : std::uint8_t { Weight, BnScale, BnShift, Threshold };

/// A trainable tensor as seen by the optimizer and the landscape prober.
struct ParamView {
  ParamRole role = ParamRole::Weight;
  std::span<float> value;
  std::span<Real> grad;
  bool clip_unit = false;    // binarized shadow weights stay within [-1, 1]
  std::size_t filter_size = 0;  // elements per output filter (Weight only)
};

struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  /// floor((L + 2p - k) / s) + 1; throws ShapeError when that is < 1.
  std::size_t output_length(std::size_t input_length) const;
  std::size_t weight_count() const noexcept { return out_channels * in_channels * kernel; }

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

/// Bias-free 1-D cross-correlation. When binarized, the forward pass uses
/// Sign(shadow weights) with threshold 0; with `binary_input` the input must
/// already be bipolar and the packed kernel uses XNOR/popcount, otherwise the
/// packed kernel adds or subtracts real inputs.
class Conv1d {
 public:
  Conv1d(ConvGeometry geometry, bool binarized = false, SteKind ste = SteKind::TanhGrad,
         bool binary_input = false);

  const ConvGeometry& geometry() const noexcept { return geom_; }
  bool binarized() const noexcept { return binarized_; }
  bool binary_input() const noexcept { return binary_input_; }
  SteKind ste() const noexcept { return ste_; }

  /// Shadow weights laid out (out, in, kernel).
  std::span<float> weights() noexcept { return weights_; }
  std::span<const float> weights() const noexcept { return weights_; }
  std::span<const Real> weight_grad() const noexcept { return grad_; }

  /// Weights as used by the forward pass: shadow, Sign(shadow) or F(shadow).
  std::vector<Real> effective_weights(SignMode sign) const;

  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  /// Accumulates into weight_grad() and returns the input gradient.
  Batch backward(const Batch& grad_output);

  void zero_grad();
  void collect_params(std::vector<ParamView>& out);

 private:
  Batch run(const Batch& input, const ForwardContext& ctx) const;
  Batch run_reference(const Batch& input, std::span<const Real> w) const;
  Batch run_packed_real_input(const Batch& input) const;
  Batch run_packed_binary_input(const Batch& input) const;

  ConvGeometry geom_;
  bool binarized_;
  SteKind ste_;
  bool binary_input_;
  std::vector<float> weights_;
  std::vector<Real> grad_;
  std::optional<Batch> cached_input_;
  SignMode cached_sign_ = SignMode::Hard;
};

/// Bias-free fully connected layer over the flattened (channels * length)
/// input. Shares the convolution kernels (a width-1 convolution).
class Dense {
 public:
  Dense(std::size_t in_features, std::size_t out_features, bool binarized = false,
        SteKind ste = SteKind::TanhGrad, bool binary_input = false);

  std::size_t in_features() const noexcept { return conv_.geometry().in_channels; }
  std::size_t out_features() const noexcept { return conv_.geometry().out_channels; }
  bool binarized() const noexcept { return conv_.binarized(); }
  bool binary_input() const noexcept { return conv_.binary_input(); }
  SteKind ste() const noexcept { return conv_.ste(); }

  /// Weights laid out (out, in).
  std::span<float> weights() noexcept { return conv_.weights(); }
  std::span<const float> weights() const noexcept { return conv_.weights(); }
  std::span<const Real> weight_grad() const noexcept { return conv_.weight_grad(); }
  std::vector<Real> effective_weights(SignMode sign) const { return conv_.effective_weights(sign); }

  /// Per-output thresholds carried by learnable-threshold models. Logits are
  /// never binarized, so these do not enter the forward pass.
  std::span<float> output_thresholds() noexcept { return output_thresholds_; }
  std::span<const float> output_thresholds() const noexcept { return output_thresholds_; }
  void set_output_thresholds(std::vector<float> values) { output_thresholds_ = std::move(values); }

  /// Output shape (batch, out_features, 1).
  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  Batch backward(const Batch& grad_output);

  void zero_grad() { conv_.zero_grad(); }
  void collect_params(std::vector<ParamView>& out) { conv_.collect_params(out); }

 private:
  Conv1d conv_;
  std::vector<float> output_thresholds_;
  std::size_t in_channels_ = 0;
  std::size_t in_length_ = 0;
};

/// Windowed maximum; backward routes each gradient to the first maximum.
class MaxPool1d {
 public:
  MaxPool1d(std::size_t kernel, std::size_t stride);

  std::size_t kernel() const noexcept { return kernel_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t output_length(std::size_t input_length) const;

  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  Batch backward(const Batch& grad_output) const;

 private:
  Batch run(const Batch& input, std::vector<std::uint32_t>* argmax) const;

  std::size_t kernel_;
  std::size_t stride_;
  std::vector<std::uint32_t> argmax_;
  std::size_t cached_input_length_ = 0;
  bool has_cache_ = false;
};

/// Per-channel batch normalization over (batch, length).
class BatchNorm1d {
 public:
  explicit BatchNorm1d(std::size_t channels, Real epsilon = 1e-5, Real momentum = 0.1);

  std::size_t channels() const noexcept { return gamma_.size(); }
  Real epsilon() const noexcept { return epsilon_; }
  Real momentum() const noexcept { return momentum_; }

  std::span<float> gamma() noexcept { return gamma_; }
  std::span<float> beta() noexcept { return beta_; }
  std::span<float> running_mean() noexcept { return running_mean_; }
  std::span<float> running_var() noexcept { return running_var_; }
  std::span<const float> gamma() const noexcept { return gamma_; }
  std::span<const float> beta() const noexcept { return beta_; }
  std::span<const float> running_mean() const noexcept { return running_mean_; }
  std::span<const float> running_var() const noexcept { return running_var_; }
  std::span<const Real> gamma_grad() const noexcept { return gamma_grad_; }
  std::span<const Real> beta_grad() const noexcept { return beta_grad_; }

  /// Train mode normalizes with batch statistics and updates the running
  /// statistics; infer mode uses the running statistics.
  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  Batch backward(const Batch& grad_output);

  void zero_grad();
  void collect_params(std::vector<ParamView>& out);

 private:
  Batch normalize_with(const Batch& input, std::span<const Real> mean,
                       std::span<const Real> inv_std) const;

  Real epsilon_;
  Real momentum_;
  std::vector<float> gamma_, beta_, running_mean_, running_var_;
  std::vector<Real> gamma_grad_, beta_grad_;
  std::optional<Batch> cached_xhat_;
  std::vector<Real> cached_inv_std_;
};

class Relu {
 public:
  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  Batch backward(const Batch& grad_output) const;

 private:
  std::optional<Batch> cached_input_;
};

/// Sign(x - alpha_c) with a straight-through gradient.
class SignActivation {
 public:
  SignActivation(std::size_t channels, SteKind ste, ThresholdMode threshold);

  SteKind ste() const noexcept { return ste_; }
  bool learnable() const noexcept { return learnable_; }
  std::size_t channels() const noexcept { return alpha_.size(); }
  std::span<float> alpha() noexcept { return alpha_; }
  std::span<const float> alpha() const noexcept { return alpha_; }
  std::span<const Real> alpha_grad() const noexcept { return alpha_grad_; }

  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  /// grad_in = grad_out * F'(x - alpha); alpha_grad -= sum of grad_in per channel.
  Batch backward(const Batch& grad_output);

  void zero_grad();
  void collect_params(std::vector<ParamView>& out);

 private:
  SteKind ste_;
  bool learnable_;
  std::vector<float> alpha_;
  std::vector<Real> alpha_grad_;
  std::optional<Batch> cached_input_;
};

/// Inverted dropout: survivors are scaled by 1 / (1 - rate) in train mode.
class Dropout {
 public:
  explicit Dropout(Real rate);

  Real rate() const noexcept { return rate_; }

  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  Batch backward(const Batch& grad_output) const;

 private:
  Real rate_;
  std::vector<Real> mask_;
  bool has_cache_ = false;
};

using Layer = std::variant<Conv1d, BatchNorm1d, MaxPool1d, Relu, SignActivation, Dropout, Dense>;

/// max(0, x).
Tensor1D relu(const Tensor1D& x);

/// Functional dropout over one tensor; identity in infer mode.
Tensor1D dropout(const Tensor1D& x, Real rate, Mode mode, std::mt19937_64& rng);

/// Functional max-pooling over one tensor.
Tensor1D maxpool1d(const Tensor1D& x, std::size_t kernel, std::size_t stride);

}  // namespace binecg
