#include "binecg/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "binecg/errors.hpp"
#include "binecg/evaluation.hpp"

namespace binecg {

void TrainConfig::validate() const {
  if (!(lr_floor > 0.0 && initial_lr > lr_floor)) {
    throw std::invalid_argument("TrainConfig: require initial_lr > lr_floor > 0");
  }
  if (!(lr_drop_factor > 0.0 && lr_drop_factor < 1.0)) {
    throw std::invalid_argument("TrainConfig: lr_drop_factor must lie in (0, 1)");
  }
  if (!(loss_ema >= 0.0 && loss_ema < 1.0)) {
    throw std::invalid_argument("TrainConfig: loss_ema must lie in [0, 1)");
  }
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss,accuracy,lr\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.loss << ',' << e.test_accuracy << ',' << e.lr << '\n';
  }
  return out.str();
}

LossAndGrad cross_entropy(std::span<const Real> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) + " classes");
  }
  const Real peak = *std::max_element(logits.begin(), logits.end());
  Real sum = 0.0;
  for (Real z : logits) sum += std::exp(z - peak);
  const Real log_norm = peak + std::log(sum);
  LossAndGrad out;
  out.loss = log_norm - logits[label];
  out.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.grad[k] = std::exp(logits[k] - log_norm);
  out.grad[label] -= 1.0;
  return out;
}

AdamOptimizer::AdamOptimizer(Real beta1, Real beta2, Real eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(std::span<const ParamView> params, Real lr) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto g = params[p].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("optimizer: non-finite gradient in parameter tensor " +
                           std::to_string(p) + " at element " + std::to_string(i));
      }
    }
  }
  if (m_.size() != params.size()) {
    m_.assign(params.size(), {});
    v_.assign(params.size(), {});
    for (std::size_t p = 0; p < params.size(); ++p) {
      m_[p].assign(params[p].value.size(), 0.0);
      v_[p].assign(params[p].value.size(), 0.0);
    }
  }
  ++t_;
  const Real bc1 = 1.0 - std::pow(beta1_, static_cast<Real>(t_));
  const Real bc2 = 1.0 - std::pow(beta2_, static_cast<Real>(t_));
  const Real step = lr * std::sqrt(bc2) / bc1;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamView& pv = params[p];
    auto& m = m_[p];
    auto& v = v_[p];
    if (m.size() != pv.value.size()) {
      throw std::invalid_argument("optimizer: parameter shapes changed between steps");
    }
    for (std::size_t i = 0; i < pv.value.size(); ++i) {
      const Real g = pv.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      Real w = static_cast<Real>(pv.value[i]) - step * m[i] / (std::sqrt(v[i]) + eps_);
      if (pv.clip_unit) w = std::clamp(w, -1.0, 1.0);
      pv.value[i] = static_cast<float>(w);
    }
  }
}

Real tb_lr_schedule(const TrainHistory& history, const TrainConfig& config) {
  Real lr = config.initial_lr;
  Real ema = 0.0;
  Real best = 0.0;
  std::size_t stale = 0;
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const Real loss = history.epochs[e].loss;
    ema = e == 0 ? loss : config.loss_ema * ema + (1.0 - config.loss_ema) * loss;
    if (e == 0 || ema < best - config.plateau_min_delta) {
      best = ema;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= config.plateau_patience) {
      lr = std::max(lr * config.lr_drop_factor, config.lr_floor);
      stale = 0;
    }
  }
  return lr;
}

std::array<Real, kNumClasses> class_weights(std::span<const EcgSegment> data,
                                            const TrainConfig& config) {
  std::array<Real, kNumClasses> w;
  w.fill(1.0);
  if (!config.class_weighting || data.empty()) return w;
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& s : data) ++counts[class_index(s.label)];
  std::size_t present = 0;
  for (auto c : counts) present += c > 0 ? 1 : 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    w[k] = counts[k] > 0 ? static_cast<Real>(data.size()) /
                               (static_cast<Real>(present) * static_cast<Real>(counts[k]))
                         : 0.0;
  }
  return w;
}

Real train_epoch(Network& network, AdamOptimizer& optimizer, std::span<const EcgSegment> data,
                 Real lr, const TrainConfig& config, std::mt19937_64& rng) {
  if (data.empty()) throw std::invalid_argument("train_epoch: empty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
  const auto weights = class_weights(data, config);

  ForwardContext ctx;
  ctx.mode = Mode::Train;
  ctx.kernel = BinaryKernel::Reference;
  ctx.sign = SignMode::Hard;
  ctx.rng = &rng;
  ctx.dropout = config.dropout;

  Real loss_sum = 0.0;
  auto params = network.parameters();
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t stop = std::min(order.size(), start + config.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, stop - start);
    network.zero_grad();
    const Batch logits = network.forward(to_batch(data, idx), ctx);
    Batch grad(logits.batch(), logits.channels(), 1);
    const Real scale = 1.0 / static_cast<Real>(idx.size());
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const std::size_t label = class_index(data[idx[n]].label);
      const auto ce = cross_entropy(logits.sample(n), label);
      loss_sum += ce.loss;
      const Real w = weights[label] * scale;
      auto g = grad.sample(n);
      for (std::size_t k = 0; k < g.size(); ++k) g[k] = w * ce.grad[k];
    }
    network.backward(grad);
    optimizer.step(params, lr);
  }
  return loss_sum / static_cast<Real>(data.size());
}

TrainHistory train(Network& network, const DatasetSplit& split, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training set");
  std::mt19937_64 rng(config.seed);
  AdamOptimizer optimizer(config.beta1, config.beta2, config.adam_eps);
  TrainHistory history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const Real lr = tb_lr_schedule(history, config);
    const Real loss = train_epoch(network, optimizer, split.train, lr, config, rng);
    const Real accuracy = split.test.empty() ? 0.0 : evaluate(network, split.test).oa;
    history.epochs.push_back({epoch + 1, loss, accuracy, lr});
    if (on_epoch) on_epoch(history.epochs.back());
  }
  return history;
}

}  // namespace binecg
