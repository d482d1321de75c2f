#include "binecg/resources.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "binecg/bits.hpp"

namespace binecg {
namespace {

constexpr std::size_t kRealBytes = 4;

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Relu: return "relu";
    case LayerKind::Sign: return "sign";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Dense: return "dense";
  }
  return "unknown";
}

std::size_t layer_raw_bytes(const LayerResources& l) {
  const std::size_t real = (l.bn_params + l.threshold_params) * kRealBytes;
  return l.binary_weights ? real : real + l.weight_params * kRealBytes;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string OpCountConvention::describe() const {
  std::ostringstream out;
  out << "flops_per_mac=" << flops_per_mac << " binary_real_input_flops=" << binary_real_input_flops
      << " bn_flops_per_element=" << bn_flops_per_element << " bops_per_mac=" << bops_per_mac
      << " pool_ops=0 sign_ops=0 word_size=" << word_size;
  return out.str();
}

std::vector<LayerResources> count_params(const NetworkSpec& spec) {
  const bool bin = spec.binarized();
  const bool alpha = bin && spec.binarization->threshold.learnable;
  std::vector<LayerResources> out;
  out.reserve(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDescriptor& d = spec.layers[i];
    LayerResources r;
    r.index = i;
    r.kind = d.kind;
    r.block = d.block;
    r.table_label = d.table_label;
    switch (d.kind) {
      case LayerKind::Conv:
        r.weight_params = d.out_channels * d.in_channels * d.kernel;
        r.binary_weights = bin;
        r.storage_padded_bytes =
            bin ? d.out_channels * words_for_bits(d.in_channels * d.kernel) * sizeof(Word)
                : r.weight_params * kRealBytes;
        break;
      case LayerKind::Dense:
        r.weight_params = d.out_channels * d.in_channels;
        r.binary_weights = bin;
        r.threshold_params = alpha ? d.out_channels : 0;
        r.storage_padded_bytes =
            bin ? d.out_channels * words_for_bits(d.in_channels) * sizeof(Word)
                : r.weight_params * kRealBytes;
        break;
      case LayerKind::BatchNorm:
        r.bn_params = 2 * d.out_channels;
        break;
      case LayerKind::Sign:
        r.threshold_params = alpha ? d.out_channels : 0;
        break;
      default:
        break;
    }
    r.storage_bits = r.binary_weights ? r.weight_params : 0;
    r.storage_padded_bytes += (r.bn_params + r.threshold_params) * kRealBytes;
    out.push_back(r);
  }
  return out;
}

std::size_t storage_bytes(const NetworkSpec& spec) {
  std::size_t bytes = 0, bits = 0;
  for (const auto& l : count_params(spec)) {
    bytes += layer_raw_bytes(l);
    bits += l.storage_bits;
  }
  return bytes + (bits + 7) / 8;
}

std::size_t storage_padded_bytes(const NetworkSpec& spec) {
  std::size_t bytes = 0;
  for (const auto& l : count_params(spec)) bytes += l.storage_padded_bytes;
  return bytes;
}

std::vector<LayerResources> count_layer_ops(const NetworkSpec& spec, std::size_t input_length,
                                            const OpCountConvention& cv) {
  auto layers = count_params(spec);
  const bool bin = spec.binarized();
  std::size_t C = spec.input_channels;
  std::size_t L = input_length;
  bool first_conv = true;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDescriptor& d = spec.layers[i];
    LayerResources& r = layers[i];
    switch (d.kind) {
      case LayerKind::Conv: {
        L = ConvGeometry{d.in_channels, d.out_channels, d.kernel, d.stride, d.padding}.output_length(L);
        C = d.out_channels;
        r.macs = static_cast<std::uint64_t>(d.out_channels) * d.in_channels * d.kernel * L;
        if (!bin) {
          r.flops = cv.flops_per_mac * static_cast<double>(r.macs);
        } else if (first_conv) {
          r.flops = cv.binary_real_input_flops * static_cast<double>(r.macs);
        } else {
          r.bops = cv.bops_per_mac * static_cast<double>(r.macs);
        }
        first_conv = false;
        break;
      }
      case LayerKind::MaxPool:
        L = MaxPool1d(d.kernel, d.stride).output_length(L);
        break;
      case LayerKind::BatchNorm:
        r.flops = cv.bn_flops_per_element * static_cast<double>(C * L);
        break;
      case LayerKind::Dense:
        r.macs = static_cast<std::uint64_t>(d.out_channels) * d.in_channels;
        C = d.out_channels;
        L = 1;
        if (bin) {
          r.bops = cv.bops_per_mac * static_cast<double>(r.macs);
        } else {
          r.flops = cv.flops_per_mac * static_cast<double>(r.macs);
        }
        break;
      default:
        break;
    }
    r.output_elements = C * L;
  }
  return layers;
}

OpCounts count_ops(const NetworkSpec& spec, std::size_t input_length,
                   const OpCountConvention& convention) {
  OpCounts total;
  for (const auto& l : count_layer_ops(spec, input_length, convention)) {
    total.flops += l.flops;
    total.bops += l.bops;
  }
  return total;
}

double speedup_estimate(double base_flops, double bin_flops, double bin_bops,
                        std::size_t word_size) {
  if (word_size == 0) throw std::invalid_argument("speedup_estimate: word size must be positive");
  const double denom = bin_flops + bin_bops / static_cast<double>(word_size);
  if (!(denom > 0.0)) throw std::invalid_argument("speedup_estimate: zero binarized cost");
  return base_flops / denom;
}

double speedup_estimate(const ResourceReport& base, const ResourceReport& bin,
                        std::size_t word_size) {
  if (base.input_length != bin.input_length) {
    throw std::invalid_argument("speedup_estimate: reports use different input lengths");
  }
  return speedup_estimate(base.flops, bin.flops, bin.bops, word_size);
}

std::size_t runtime_memory_estimate(const NetworkSpec& spec, std::size_t input_length) {
  const bool bin = spec.binarized();
  std::size_t bytes = storage_bytes(spec) + kRealBytes * spec.input_channels * input_length;
  for (const auto& l : count_layer_ops(spec, input_length)) {
    const LayerDescriptor& d = spec.layers[l.index];
    const bool tensor = d.kind == LayerKind::Conv || d.kind == LayerKind::MaxPool ||
                        d.kind == LayerKind::Dense;
    if (!tensor) continue;
    if (bin && d.kind != LayerKind::Dense && d.block > 1) {
      bytes += (l.output_elements + 7) / 8;
    } else {
      bytes += kRealBytes * l.output_elements;
    }
  }
  return bytes;
}

ResourceReport make_report(const NetworkSpec& spec, std::size_t input_length,
                           const OpCountConvention& convention) {
  ResourceReport r;
  r.kind = spec.kind;
  r.input_length = input_length;
  r.convention = convention;
  r.layers = count_layer_ops(spec, input_length, convention);
  for (const auto& l : r.layers) {
    r.weight_params += l.weight_params;
    r.bn_params += l.bn_params;
    r.threshold_params += l.threshold_params;
    r.storage_padded_bytes += l.storage_padded_bytes;
    r.macs += l.macs;
    r.flops += l.flops;
    r.bops += l.bops;
  }
  r.storage_bytes = storage_bytes(spec);
  r.runtime_memory_bytes = runtime_memory_estimate(spec, input_length);
  return r;
}

std::string ResourceReport::to_json() const {
  nlohmann::json j;
  j["model"] = std::string(model_name(kind));
  j["input_length"] = input_length;
  j["convention"] = {{"flops_per_mac", convention.flops_per_mac},
                     {"binary_real_input_flops", convention.binary_real_input_flops},
                     {"bn_flops_per_element", convention.bn_flops_per_element},
                     {"bops_per_mac", convention.bops_per_mac},
                     {"pool_ops", 0},
                     {"sign_ops", 0},
                     {"word_size", convention.word_size}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& l : layers) {
    rows.push_back({{"index", l.index},
                    {"kind", kind_name(l.kind)},
                    {"block", l.block},
                    {"table_label", l.table_label},
                    {"weight_params", l.weight_params},
                    {"bn_params", l.bn_params},
                    {"threshold_params", l.threshold_params},
                    {"binary_weights", l.binary_weights},
                    {"storage_bits", l.storage_bits},
                    {"storage_padded_bytes", l.storage_padded_bytes},
                    {"output_elements", l.output_elements},
                    {"macs", l.macs},
                    {"flops", l.flops},
                    {"bops", l.bops}});
  }
  j["layers"] = rows;
  j["totals"] = {{"weight_params", weight_params},
                 {"bn_params", bn_params},
                 {"threshold_params", threshold_params},
                 {"params", weight_params + bn_params + threshold_params},
                 {"storage_bytes", storage_bytes},
                 {"storage_kb", static_cast<double>(storage_bytes) / 1024.0},
                 {"storage_padded_bytes", storage_padded_bytes},
                 {"macs", macs},
                 {"flops", flops},
                 {"bops", bops},
                 {"runtime_memory_bytes", runtime_memory_bytes},
                 {"runtime_memory_kb", static_cast<double>(runtime_memory_bytes) / 1024.0}};
  return j.dump(2) + "\n";
}

ReferenceFigures published_baseline() { return {263.1875, 444.93, 4.875e6, 0.0}; }
ReferenceFigures published_btpn() { return {10.62, 117.70, 2.458e5, 4.471e6}; }

std::string resource_table(const ResourceReport& base, const ResourceReport& bin) {
  const ReferenceFigures pb = published_baseline();
  const ReferenceFigures pn = published_btpn();
  const double kb = 1024.0;
  const double sb = static_cast<double>(base.storage_bytes) / kb;
  const double sn = static_cast<double>(bin.storage_bytes) / kb;
  const double mb = static_cast<double>(base.runtime_memory_bytes) / kb;
  const double mn = static_cast<double>(bin.runtime_memory_bytes) / kb;
  const std::size_t ws = bin.convention.word_size;

  std::ostringstream out;
  out << "convention: " << base.convention.describe() << "\n";
  out << "runtime memory model: weights + 4 B per input/conv/pool/dense output element, "
         "BN in place, binary activations after block 1 at 1 bit\n\n";
  out << "model        storage            runtime memory       computation\n";
  auto row = [&](const std::string& name, double s, double ps, double m, double pm,
                 const ResourceReport& r, const ReferenceFigures& p) {
    out << name << fmt("%.4fKB", s) << " (" << fmt("%.2fKB", ps) << ")  " << fmt("%.2fKB", m)
        << " (" << fmt("%.2fKB", pm) << ")  " << fmt("%.4e FLOPs", r.flops) << " ("
        << fmt("%.3e", p.flops) << ")";
    if (r.bops > 0.0) out << " + " << fmt("%.4e BOPs", r.bops) << " (" << fmt("%.3e", p.bops) << ")";
    out << "\n";
  };
  row(std::string(model_name(base.kind)) + std::string(13 - model_name(base.kind).size(), ' '), sb,
      pb.storage_kb, mb, pb.runtime_memory_kb, base, pb);
  row(std::string(model_name(bin.kind)) + std::string(13 - model_name(bin.kind).size(), ' '), sn,
      pn.storage_kb, mn, pn.runtime_memory_kb, bin, pn);
  const double speed = speedup_estimate(base, bin, ws);
  const double published_speed = speedup_estimate(pb.flops, pn.flops, pn.bops, ws);
  out << "saving/speedup " << fmt("%.2fx", sb / sn) << " (" << fmt("%.1fx", pb.storage_kb / pn.storage_kb)
      << ")  " << fmt("%.2fx", mb / mn) << " ("
      << fmt("%.2fx", pb.runtime_memory_kb / pn.runtime_memory_kb) << ")  " << fmt("%.2fx", speed)
      << " (" << fmt("%.2fx", published_speed) << ")\n";
  out << "(published figures in parentheses; runtime memory is an estimate and is not expected to match)\n";
  return out.str();
}

}  // namespace binecg
