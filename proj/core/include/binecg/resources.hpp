#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "binecg/model.hpp"

namespace binecg {

/// Counting rules. Pooling comparisons, ReLU, Sign and dropout are free.
struct OpCountConvention {
  double flops_per_mac = 2.0;           // real multiply-accumulate
  double binary_real_input_flops = 1.0; // per accumulation of a +-1 weight on a real input
  double bn_flops_per_element = 2.0;    // scale and shift
  double bops_per_mac = 2.0;            // XNOR plus popcount share per binary MAC
  std::size_t word_size = 32;           // bit operations equivalent to one FLOP

  std::string describe() const;
};

struct LayerResources {
  std::size_t index = 0;  // position in NetworkSpec::layers
  LayerKind kind = LayerKind::Conv;
  int block = 0;
  int table_label = 0;
  std::size_t weight_params = 0;
  std::size_t bn_params = 0;
  std::size_t threshold_params = 0;
  bool binary_weights = false;
  std::size_t storage_bits = 0;           // raw, without padding
  std::size_t storage_padded_bytes = 0;   // binary rows padded to whole 64-bit words
  std::size_t output_elements = 0;
  std::uint64_t macs = 0;
  double flops = 0.0;
  double bops = 0.0;
};

struct ResourceReport {
  ModelKind kind = ModelKind::Baseline;
  std::size_t input_length = kSegmentLength;
  OpCountConvention convention;
  std::vector<LayerResources> layers;

  std::size_t weight_params = 0;
  std::size_t bn_params = 0;
  std::size_t threshold_params = 0;
  std::size_t storage_bytes = 0;         // raw bits / 8 for binary weights
  std::size_t storage_padded_bytes = 0;
  std::uint64_t macs = 0;
  double flops = 0.0;
  double bops = 0.0;
  std::size_t runtime_memory_bytes = 0;

  std::string to_json() const;
};

/// Parameter census per layer; conv and dense weights, 2 per BN channel,
/// one threshold per output channel when learnable (including the dense layer).
std::vector<LayerResources> count_params(const NetworkSpec& spec);

/// 4 bytes per real weight or BN/threshold value; 1 bit per binary weight.
std::size_t storage_bytes(const NetworkSpec& spec);
/// As storage_bytes, with each packed weight row padded to a 64-bit word.
std::size_t storage_padded_bytes(const NetworkSpec& spec);

struct OpCounts {
  double flops = 0.0;
  double bops = 0.0;
};

/// Per-layer MACs, FLOPs and BOPs filled in on top of count_params. Padded
/// convolution taps are counted. In a binarized model the first convolution
/// is charged as FLOPs and the other conv/dense layers as BOPs.
std::vector<LayerResources> count_layer_ops(const NetworkSpec& spec, std::size_t input_length,
                                            const OpCountConvention& convention = {});
OpCounts count_ops(const NetworkSpec& spec, std::size_t input_length,
                   const OpCountConvention& convention = {});

/// base_flops / (bin_flops + bin_bops / word_size). Throws std::invalid_argument
/// when the denominator is zero.
double speedup_estimate(double base_flops, double bin_flops, double bin_bops,
                        std::size_t word_size = 32);
double speedup_estimate(const ResourceReport& base, const ResourceReport& bin,
                        std::size_t word_size = 32);

/// Weight storage plus 4 bytes per element of the input and of every conv,
/// pool and dense output (batch norm runs in place). In binarized models the
/// conv and pool outputs after the first block take 1 bit per element,
/// rounded up to whole bytes per tensor.
std::size_t runtime_memory_estimate(const NetworkSpec& spec, std::size_t input_length);

ResourceReport make_report(const NetworkSpec& spec, std::size_t input_length = kSegmentLength,
                           const OpCountConvention& convention = {});

/// Published reference figures for comparison columns.
struct ReferenceFigures {
  double storage_kb;
  double runtime_memory_kb;
  double flops;
  double bops;
};
ReferenceFigures published_baseline();
ReferenceFigures published_btpn();

/// Storage / memory / computation table for a baseline and a binarized report,
/// with the published figures alongside and the convention record on top.
std::string resource_table(const ResourceReport& base, const ResourceReport& bin);

}  // namespace binecg
