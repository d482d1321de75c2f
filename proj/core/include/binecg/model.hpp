#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "binecg/layers.hpp"
#include "binecg/tensor.hpp"

namespace binecg {

inline constexpr std::size_t kSegmentLength = 3600;
inline constexpr std::size_t kNumClasses = 5;

/// Model variants. Binarized names read <weight STE><activation STE>: T = tanh,
/// P = piecewise polynomial; the Alpha variant learns activation thresholds.
enum class ModelKind : std::uint8_t {
  Baseline = 0,
  BTTN = 1,
  BTPN = 2,
  BPPN = 3,
  BPTN = 4,
  BTPNAlpha = 5,
};

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::Baseline, ModelKind::BTTN,
                                               ModelKind::BTPN,     ModelKind::BPPN,
                                               ModelKind::BPTN,     ModelKind::BTPNAlpha};

std::string_view model_name(ModelKind kind) noexcept;
/// Accepts "baseline", "bttn", "btpn", "bppn", "bptn", "btpn-alpha" (case-insensitive).
std::optional<ModelKind> parse_model_kind(std::string_view name);

struct BinConfig {
  SteKind weights = SteKind::TanhGrad;
  SteKind activations = SteKind::PolyGrad;
  ThresholdMode threshold = ThresholdMode::fixed_zero();

  /// Throws std::invalid_argument for ModelKind::Baseline.
  static BinConfig for_model(ModelKind kind);

  friend bool operator==(const BinConfig&, const BinConfig&) = default;
};

/// The named variant a configuration corresponds to, if any.
std::optional<ModelKind> model_kind_for(const BinConfig& cfg);

enum class LayerKind : std::uint8_t { Conv, BatchNorm, MaxPool, Relu, Sign, Dropout, Dense };

struct LayerDescriptor {
  LayerKind kind = LayerKind::Conv;
  int table_label = 0;  // row of the architecture table (0 for inserted layers)
  int block = 0;        // 1-based basic block, 0 for the classifier head
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  friend bool operator==(const LayerDescriptor&, const LayerDescriptor&) = default;
};

struct NetworkSpec {
  ModelKind kind = ModelKind::Baseline;
  std::optional<BinConfig> binarization;
  std::vector<LayerDescriptor> layers;  // full ordered pipeline
  std::size_t input_channels = 1;
  std::size_t input_length = kSegmentLength;
  std::size_t num_classes = kNumClasses;
  Real dropout_rate = 0.5;
  Real bn_epsilon = 1e-5;
  Real bn_momentum = 0.1;

  bool binarized() const noexcept { return binarization.has_value(); }
};

/// The seven conv/pool basic blocks and the dense classifier: labels 1..15.
std::vector<LayerDescriptor> baseline_table();

/// Expands architecture-table rows (conv, pool, ..., dense) into the full
/// pipeline. Baseline blocks: Conv -> BN -> MaxPool -> ReLU (no ReLU after the
/// last block). Binarized blocks: BinConv -> MaxPool -> BN -> Sign. Dropout
/// precedes the dense layer in both.
NetworkSpec assemble_spec(ModelKind kind, std::optional<BinConfig> binarization,
                          const std::vector<LayerDescriptor>& table);

NetworkSpec make_spec(ModelKind kind);
NetworkSpec make_binarized_spec(const BinConfig& cfg);

/// Output length after every conv and pool row, in order. Throws ShapeError
/// when any intermediate length drops below one.
std::vector<std::size_t> shape_plan(const NetworkSpec& spec, std::size_t input_length);

/// Flattened feature count reaching the dense layer.
std::size_t flatten_size(const NetworkSpec& spec, std::size_t input_length);

/// Architecture plus trainable state: shadow weights, BN statistics and
/// thresholds. Copyable; concurrent evaluate() calls on one instance are safe.
class Network {
 public:
  /// Weights uniform in [-b, b] with b = sqrt(1 / fan_in).
  Network(NetworkSpec spec, std::uint64_t seed);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::span<Layer> layers() noexcept { return layers_; }
  std::span<const Layer> layers() const noexcept { return layers_; }

  /// Logits shaped (batch, num_classes, 1). Train mode caches for backward.
  Batch forward(const Batch& input, const ForwardContext& ctx);
  Batch evaluate(const Batch& input, const ForwardContext& ctx) const;
  /// Back-propagates dLoss/dLogits, accumulating parameter gradients.
  void backward(const Batch& grad_logits);

  void zero_grad();
  std::vector<ParamView> parameters();

  /// Class scores for one segment of spec().input_length samples.
  std::vector<Real> infer(std::span<const Real> segment,
                          BinaryKernel kernel = BinaryKernel::Packed) const;

 private:
  NetworkSpec spec_;
  std::vector<Layer> layers_;
};

Network build_baseline(std::uint64_t seed);
Network build_binarized(const BinConfig& cfg, std::uint64_t seed);
Network build_model(ModelKind kind, std::uint64_t seed);

}  // namespace binecg
