#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "binecg/data.hpp"
#include "binecg/layers.hpp"
#include "binecg/model.hpp"

namespace binecg {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  // Topographic learning-rate schedule: start large, drop on plateaus.
  Real initial_lr = 1e-2;
  Real lr_drop_factor = 0.1;
  std::size_t plateau_patience = 5;
  Real plateau_min_delta = 1e-3;
  Real lr_floor = 1e-4;
  Real loss_ema = 0.9;  // smoothing applied to epoch loss before plateau detection

  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real adam_eps = 1e-8;

  bool class_weighting = false;  // inverse-frequency loss weights
  bool shuffle = true;
  bool dropout = true;

  /// Throws std::invalid_argument unless initial_lr > lr_floor > 0,
  /// 0 < lr_drop_factor < 1 and batch_size > 0.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  Real loss = 0.0;
  Real test_accuracy = 0.0;
  Real lr = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// "epoch,loss,accuracy,lr" header plus one row per epoch.
  std::string to_csv() const;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct LossAndGrad {
  Real loss = 0.0;
  std::vector<Real> grad;  // softmax - one_hot
};

/// Softmax cross-entropy via log-sum-exp.
LossAndGrad cross_entropy(std::span<const Real> logits, std::size_t label);

/// Adam with bias correction. Parameters flagged clip_unit are clamped to
/// [-1, 1] after every step.
class AdamOptimizer {
 public:
  AdamOptimizer(Real beta1 = 0.9, Real beta2 = 0.999, Real eps = 1e-8);

  /// Throws NumericError if any gradient is non-finite; parameters are left
  /// untouched in that case.
  void step(std::span<const ParamView> params, Real lr);

  std::size_t steps() const noexcept { return t_; }

 private:
  Real beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<Real>> m_, v_;
};

/// Learning rate for the next epoch. Replays the EMA-smoothed epoch losses:
/// an epoch improves when the EMA falls below the best EMA by more than
/// plateau_min_delta; after plateau_patience consecutive non-improving epochs
/// the rate is multiplied by lr_drop_factor (never below lr_floor) and the
/// counter restarts.
Real tb_lr_schedule(const TrainHistory& history, const TrainConfig& config);

/// Per-class loss weights (all ones unless config.class_weighting).
std::array<Real, kNumClasses> class_weights(std::span<const EcgSegment> data,
                                            const TrainConfig& config);

/// One pass over `data` in train mode; returns the mean sample loss.
Real train_epoch(Network& network, AdamOptimizer& optimizer, std::span<const EcgSegment> data,
                 Real lr, const TrainConfig& config, std::mt19937_64& rng);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full training loop. Deterministic for a fixed config.seed: one random
/// stream drives both shuffling and dropout.
TrainHistory train(Network& network, const DatasetSplit& split, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

}  // namespace binecg
