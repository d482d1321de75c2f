#include "binecg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "binecg/training.hpp"

namespace binecg {
namespace {

constexpr std::size_t kEvalBatch = 64;

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::size_t argmax(std::span<const Real> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

template <typename Fn>
void for_each_chunk(std::span<const EcgSegment> segments, std::size_t chunk, Fn&& fn) {
  for (std::size_t start = 0; start < segments.size(); start += chunk) {
    const std::size_t n = std::min(chunk, segments.size() - start);
    fn(start, segments.subspan(start, n));
  }
}

Real batch_loss(const Batch& logits, std::span<const EcgSegment> segments) {
  Real sum = 0.0;
  for (std::size_t n = 0; n < segments.size(); ++n) {
    sum += cross_entropy(logits.sample(n), class_index(segments[n].label)).loss;
  }
  return sum;
}

}  // namespace

std::string Metrics::to_json() const {
  nlohmann::json j;
  j["total"] = total;
  j["oa"] = oa;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : confusion) rows.push_back(row);
  j["confusion"] = rows;
  nlohmann::json classes = nlohmann::json::object();
  for (AamiClass c : kAllClasses) {
    const std::size_t k = class_index(c);
    std::size_t support = 0;
    for (std::size_t p = 0; p < kNumClasses; ++p) support += confusion[k][p];
    classes[std::string(1, class_letter(c))] = {
        {"sen", optional_json(sen[k])}, {"ppr", optional_json(ppr[k])}, {"support", support}};
  }
  j["classes"] = classes;
  return j.dump(2) + "\n";
}

std::string Metrics::confusion_csv() const {
  std::ostringstream out;
  out << "true\\pred";
  for (AamiClass c : kAllClasses) out << ',' << class_letter(c);
  out << '\n';
  for (AamiClass c : kAllClasses) {
    out << class_letter(c);
    for (std::size_t v : confusion[class_index(c)]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

Metrics compute_metrics(std::span<const AamiClass> truth, std::span<const AamiClass> predicted) {
  if (truth.empty()) throw std::invalid_argument("compute_metrics: empty evaluation set");
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("compute_metrics: " + std::to_string(truth.size()) +
                                " labels but " + std::to_string(predicted.size()) + " predictions");
  }
  Metrics m;
  m.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++m.confusion[class_index(truth[i])][class_index(predicted[i])];
  }
  std::size_t hits = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      row += m.confusion[k][j];
      col += m.confusion[j][k];
    }
    hits += m.confusion[k][k];
    m.sen[k] = ratio(m.confusion[k][k], row);
    m.ppr[k] = ratio(m.confusion[k][k], col);
  }
  m.oa = static_cast<double>(hits) / static_cast<double>(m.total);
  return m;
}

std::vector<AamiClass> predict(const Network& network, std::span<const EcgSegment> segments,
                               BinaryKernel kernel) {
  ForwardContext ctx;
  ctx.mode = Mode::Infer;
  ctx.kernel = kernel;
  std::vector<AamiClass> out;
  out.reserve(segments.size());
  for_each_chunk(segments, kEvalBatch, [&](std::size_t, std::span<const EcgSegment> chunk) {
    const Batch logits = network.evaluate(to_batch(chunk), ctx);
    for (std::size_t n = 0; n < chunk.size(); ++n) {
      out.push_back(static_cast<AamiClass>(argmax(logits.sample(n))));
    }
  });
  return out;
}

Metrics evaluate(const Network& network, std::span<const EcgSegment> segments) {
  if (segments.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
  std::vector<AamiClass> truth;
  truth.reserve(segments.size());
  for (const auto& s : segments) truth.push_back(s.label);
  const auto predicted = predict(network, segments);
  return compute_metrics(truth, predicted);
}

Real mean_loss(const Network& network, std::span<const EcgSegment> segments) {
  if (segments.empty()) throw std::invalid_argument("mean_loss: empty evaluation set");
  ForwardContext ctx;
  ctx.mode = Mode::Infer;
  Real sum = 0.0;
  for_each_chunk(segments, kEvalBatch, [&](std::size_t, std::span<const EcgSegment> chunk) {
    sum += batch_loss(network.evaluate(to_batch(chunk), ctx), chunk);
  });
  return sum / static_cast<Real>(segments.size());
}

Real LandscapeGrid::axis_variance() const {
  if (resolution == 0) return 0.0;
  const std::size_t c = resolution / 2;
  auto variance = [this](auto&& value) {
    Real mean = 0.0;
    for (std::size_t k = 0; k < resolution; ++k) mean += value(k);
    mean /= static_cast<Real>(resolution);
    Real var = 0.0;
    for (std::size_t k = 0; k < resolution; ++k) var += (value(k) - mean) * (value(k) - mean);
    return var / static_cast<Real>(resolution);
  };
  const Real row = variance([&](std::size_t k) { return at(c, k); });
  const Real col = variance([&](std::size_t k) { return at(k, c); });
  return 0.5 * (row + col);
}

std::string LandscapeGrid::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "x,y,loss\n";
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      out << coords[i] << ',' << coords[j] << ',' << at(i, j) << '\n';
    }
  }
  return out.str();
}

LandscapeGrid loss_landscape(const Network& network, std::span<const EcgSegment> samples,
                             const LandscapeOptions& options) {
  if (options.resolution == 0 || options.resolution % 2 == 0) {
    throw std::invalid_argument("loss_landscape: resolution must be odd");
  }
  if (samples.empty()) throw std::invalid_argument("loss_landscape: empty sample set");
  if (samples.size() > options.max_samples) samples = samples.first(options.max_samples);

  Network probe = network;
  std::vector<ParamView> weights;
  for (const ParamView& p : probe.parameters()) {
    if (p.role == ParamRole::Weight) weights.push_back(p);
  }
  std::vector<std::vector<float>> base;
  for (const auto& p : weights) base.emplace_back(p.value.begin(), p.value.end());

  auto direction = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> d(weights.size());
    for (std::size_t t = 0; t < weights.size(); ++t) {
      const std::size_t n = base[t].size();
      const std::size_t f = weights[t].filter_size ? weights[t].filter_size : n;
      d[t].resize(n);
      for (double& v : d[t]) v = normal(rng);
      for (std::size_t start = 0; start < n; start += f) {
        double wn = 0.0, dn = 0.0;
        for (std::size_t i = start; i < start + f; ++i) {
          wn += static_cast<double>(base[t][i]) * base[t][i];
          dn += d[t][i] * d[t][i];
        }
        const double s = dn > 0.0 ? std::sqrt(wn / dn) : 0.0;
        for (std::size_t i = start; i < start + f; ++i) d[t][i] *= s;
      }
    }
    return d;
  };

  LandscapeGrid grid;
  grid.resolution = options.resolution;
  grid.scale = options.scale;
  grid.seed_x = options.seed;
  grid.seed_y = options.seed + 0x9E3779B97F4A7C15ULL;
  const auto dx = direction(grid.seed_x);
  const auto dy = direction(grid.seed_y);

  const std::size_t R = options.resolution;
  grid.coords.resize(R);
  for (std::size_t i = 0; i < R; ++i) {
    grid.coords[i] = R == 1 ? 0.0
                            : options.scale * (2.0 * static_cast<double>(i) - static_cast<double>(R - 1)) /
                                  static_cast<double>(R - 1);
  }

  std::vector<Batch> inputs;
  std::vector<std::span<const EcgSegment>> chunks;
  for_each_chunk(samples, kEvalBatch, [&](std::size_t, std::span<const EcgSegment> chunk) {
    inputs.push_back(to_batch(chunk));
    chunks.push_back(chunk);
  });

  ForwardContext ctx;
  ctx.kernel = BinaryKernel::Reference;
  ctx.dropout = false;
  ctx.mode = options.batch_statistics ? Mode::Train : Mode::Infer;

  grid.loss.resize(R * R);
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < R; ++j) {
      const double x = grid.coords[i];
      const double y = grid.coords[j];
      for (std::size_t t = 0; t < weights.size(); ++t) {
        auto w = weights[t].value;
        for (std::size_t k = 0; k < w.size(); ++k) {
          w[k] = static_cast<float>(static_cast<double>(base[t][k]) + x * dx[t][k] + y * dy[t][k]);
        }
      }
      Real sum = 0.0;
      for (std::size_t b = 0; b < inputs.size(); ++b) {
        const Batch logits = options.batch_statistics ? probe.forward(inputs[b], ctx)
                                                      : probe.evaluate(inputs[b], ctx);
        sum += batch_loss(logits, chunks[b]);
      }
      grid.loss[i * R + j] = sum / static_cast<Real>(samples.size());
    }
  }
  return grid;
}

}  // namespace binecg
