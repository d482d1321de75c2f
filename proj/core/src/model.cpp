#include "binecg/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "binecg/errors.hpp"

namespace binecg {

std::string_view model_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Baseline: return "baseline";
    case ModelKind::BTTN: return "bttn";
    case ModelKind::BTPN: return "btpn";
    case ModelKind::BPPN: return "bppn";
    case ModelKind::BPTN: return "bptn";
    case ModelKind::BTPNAlpha: return "btpn-alpha";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "btpn-α" || lower == "btpn_alpha" || lower == "btpna") lower = "btpn-alpha";
  for (ModelKind k : kAllModelKinds) {
    if (model_name(k) == lower) return k;
  }
  return std::nullopt;
}

BinConfig BinConfig::for_model(ModelKind kind) {
  using enum SteKind;
  switch (kind) {
    case ModelKind::BTTN: return {TanhGrad, TanhGrad, ThresholdMode::fixed_zero()};
    case ModelKind::BTPN: return {TanhGrad, PolyGrad, ThresholdMode::fixed_zero()};
    case ModelKind::BPPN: return {PolyGrad, PolyGrad, ThresholdMode::fixed_zero()};
    case ModelKind::BPTN: return {PolyGrad, TanhGrad, ThresholdMode::fixed_zero()};
    case ModelKind::BTPNAlpha: return {TanhGrad, PolyGrad, ThresholdMode::learnable_per_channel()};
    case ModelKind::Baseline: break;
  }
  throw std::invalid_argument("BinConfig: the baseline model is not binarized");
}

std::optional<ModelKind> model_kind_for(const BinConfig& cfg) {
  for (ModelKind k : kAllModelKinds) {
    if (k != ModelKind::Baseline && BinConfig::for_model(k) == cfg) return k;
  }
  return std::nullopt;
}

std::vector<LayerDescriptor> baseline_table() {
  auto conv = [](int label, int block, std::size_t out, std::size_t in, std::size_t k,
                 std::size_t s, std::size_t p) {
    return LayerDescriptor{LayerKind::Conv, label, block, out, in, k, s, p};
  };
  auto pool = [](int label, int block, std::size_t k, std::size_t s) {
    return LayerDescriptor{LayerKind::MaxPool, label, block, 0, 0, k, s, 0};
  };
  return {
      conv(1, 1, 8, 1, 16, 2, 7),    pool(2, 1, 8, 4),
      conv(3, 2, 12, 8, 12, 2, 5),   pool(4, 2, 4, 2),
      conv(5, 3, 32, 12, 9, 1, 4),   pool(6, 3, 5, 2),
      conv(7, 4, 64, 32, 7, 1, 3),   pool(8, 4, 4, 2),
      conv(9, 5, 64, 64, 5, 1, 2),   pool(10, 5, 2, 2),
      conv(11, 6, 64, 64, 3, 1, 1),  pool(12, 6, 2, 2),
      conv(13, 7, 72, 64, 3, 1, 1),  pool(14, 7, 2, 2),
      LayerDescriptor{LayerKind::Dense, 15, 0, 5, 216, 0, 1, 0},
  };
}

NetworkSpec assemble_spec(ModelKind kind, std::optional<BinConfig> binarization,
                          const std::vector<LayerDescriptor>& table) {
  NetworkSpec spec;
  spec.kind = kind;
  spec.binarization = binarization;
  if (table.empty()) return spec;

  int last_block = 0;
  for (const auto& row : table) last_block = std::max(last_block, row.block);

  const bool bin = binarization.has_value();
  std::size_t channels = spec.input_channels;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const LayerDescriptor& row = table[i];
    if (row.kind == LayerKind::Conv) {
      if (i + 1 >= table.size() || table[i + 1].kind != LayerKind::MaxPool) {
        throw std::invalid_argument("assemble_spec: every conv row must be followed by a pool row");
      }
      const LayerDescriptor& pool = table[i + 1];
      channels = row.out_channels;
      LayerDescriptor bn{LayerKind::BatchNorm, 0, row.block, channels, channels, 0, 1, 0};
      LayerDescriptor pool_desc = pool;
      pool_desc.in_channels = pool_desc.out_channels = channels;
      spec.layers.push_back(row);
      if (bin) {
        spec.layers.push_back(pool_desc);
        spec.layers.push_back(bn);
        spec.layers.push_back({LayerKind::Sign, 0, row.block, channels, channels, 0, 1, 0});
      } else {
        spec.layers.push_back(bn);
        spec.layers.push_back(pool_desc);
        if (row.block != last_block) {
          spec.layers.push_back({LayerKind::Relu, 0, row.block, channels, channels, 0, 1, 0});
        }
      }
      ++i;
    } else if (row.kind == LayerKind::Dense) {
      spec.layers.push_back({LayerKind::Dropout, 0, 0, 0, 0, 0, 1, 0});
      spec.layers.push_back(row);
    } else {
      throw std::invalid_argument("assemble_spec: table rows must be conv/pool pairs and dense");
    }
  }
  const auto& head = spec.layers.back();
  if (head.kind == LayerKind::Dense) spec.num_classes = head.out_channels;
  return spec;
}

NetworkSpec make_spec(ModelKind kind) {
  if (kind == ModelKind::Baseline) return assemble_spec(kind, std::nullopt, baseline_table());
  return assemble_spec(kind, BinConfig::for_model(kind), baseline_table());
}

NetworkSpec make_binarized_spec(const BinConfig& cfg) {
  const auto kind = model_kind_for(cfg);
  if (!kind) {
    throw std::invalid_argument("make_binarized_spec: configuration matches no model variant");
  }
  return assemble_spec(*kind, cfg, baseline_table());
}

std::vector<std::size_t> shape_plan(const NetworkSpec& spec, std::size_t input_length) {
  if (input_length == 0) throw ShapeError("shape_plan: input length must be positive");
  std::vector<std::size_t> plan;
  std::size_t L = input_length;
  for (const auto& d : spec.layers) {
    if (d.kind == LayerKind::Conv) {
      L = ConvGeometry{d.in_channels, d.out_channels, d.kernel, d.stride, d.padding}.output_length(L);
      plan.push_back(L);
    } else if (d.kind == LayerKind::MaxPool) {
      L = MaxPool1d(d.kernel, d.stride).output_length(L);
      plan.push_back(L);
    }
  }
  return plan;
}

std::size_t flatten_size(const NetworkSpec& spec, std::size_t input_length) {
  std::size_t L = input_length;
  std::size_t C = spec.input_channels;
  for (const auto& d : spec.layers) {
    if (d.kind == LayerKind::Conv) {
      L = ConvGeometry{d.in_channels, d.out_channels, d.kernel, d.stride, d.padding}.output_length(L);
      C = d.out_channels;
    } else if (d.kind == LayerKind::MaxPool) {
      L = MaxPool1d(d.kernel, d.stride).output_length(L);
    }
  }
  return C * L;
}

Network::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  std::mt19937_64 rng(seed);
  auto init_uniform = [&rng](std::span<float> w, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& v : w) v = static_cast<float>(dist(rng));
  };

  const bool bin = spec_.binarized();
  const BinConfig cfg = spec_.binarization.value_or(BinConfig{});
  const std::size_t features = flatten_size(spec_, spec_.input_length);
  bool first_conv = true;
  for (const auto& d : spec_.layers) {
    switch (d.kind) {
      case LayerKind::Conv: {
        Conv1d conv(ConvGeometry{d.in_channels, d.out_channels, d.kernel, d.stride, d.padding}, bin,
                    cfg.weights, !first_conv);
        init_uniform(conv.weights(), d.in_channels * d.kernel);
        layers_.emplace_back(std::move(conv));
        first_conv = false;
        break;
      }
      case LayerKind::BatchNorm:
        layers_.emplace_back(BatchNorm1d(d.out_channels, spec_.bn_epsilon, spec_.bn_momentum));
        break;
      case LayerKind::MaxPool:
        layers_.emplace_back(MaxPool1d(d.kernel, d.stride));
        break;
      case LayerKind::Relu:
        layers_.emplace_back(Relu{});
        break;
      case LayerKind::Sign:
        layers_.emplace_back(SignActivation(d.out_channels, cfg.activations, cfg.threshold));
        break;
      case LayerKind::Dropout:
        layers_.emplace_back(Dropout(spec_.dropout_rate));
        break;
      case LayerKind::Dense: {
        if (d.in_channels != features) {
          throw ShapeError("network: dense layer expects " + std::to_string(d.in_channels) +
                           " features but the pipeline produces " + std::to_string(features));
        }
        Dense dense(d.in_channels, d.out_channels, bin, cfg.weights, bin);
        init_uniform(dense.weights(), d.in_channels);
        if (bin && cfg.threshold.learnable) {
          dense.set_output_thresholds(std::vector<float>(d.out_channels, cfg.threshold.initial));
        }
        layers_.emplace_back(std::move(dense));
        break;
      }
    }
  }
}

Batch Network::forward(const Batch& input, const ForwardContext& ctx) {
  Batch x = input;
  for (auto& layer : layers_) {
    x = std::visit([&](auto& l) { return l.forward(x, ctx); }, layer);
  }
  return x;
}

Batch Network::evaluate(const Batch& input, const ForwardContext& ctx) const {
  Batch x = input;
  for (const auto& layer : layers_) {
    x = std::visit([&](const auto& l) { return l.evaluate(x, ctx); }, layer);
  }
  return x;
}

void Network::backward(const Batch& grad_logits) {
  Batch g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = std::visit([&](auto& l) { return l.backward(g); }, *it);
  }
}

void Network::zero_grad() {
  for (auto& layer : layers_) {
    std::visit(
        [](auto& l) {
          if constexpr (requires { l.zero_grad(); }) l.zero_grad();
        },
        layer);
  }
}

std::vector<ParamView> Network::parameters() {
  std::vector<ParamView> out;
  for (auto& layer : layers_) {
    std::visit(
        [&out](auto& l) {
          if constexpr (requires { l.collect_params(out); }) l.collect_params(out);
        },
        layer);
  }
  return out;
}

std::vector<Real> Network::infer(std::span<const Real> segment, BinaryKernel kernel) const {
  const std::size_t expected = spec_.input_channels * spec_.input_length;
  if (segment.size() != expected) {
    throw std::invalid_argument("infer: expected a segment of " + std::to_string(expected) +
                                " samples, got " + std::to_string(segment.size()));
  }
  Batch input(1, spec_.input_channels, spec_.input_length);
  std::copy(segment.begin(), segment.end(), input.data().begin());
  ForwardContext ctx;
  ctx.mode = Mode::Infer;
  ctx.kernel = kernel;
  const Batch logits = evaluate(input, ctx);
  return {logits.data().begin(), logits.data().end()};
}

Network build_baseline(std::uint64_t seed) { return Network(make_spec(ModelKind::Baseline), seed); }

Network build_binarized(const BinConfig& cfg, std::uint64_t seed) {
  return Network(make_binarized_spec(cfg), seed);
}

Network build_model(ModelKind kind, std::uint64_t seed) { return Network(make_spec(kind), seed); }

}  // namespace binecg
