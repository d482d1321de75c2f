#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "binecg/data.hpp"
#include "binecg/model.hpp"

namespace binecg {

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

/// Rows are true classes, columns predicted classes. SEN and PPR are empty
/// when their denominator is zero.
struct Metrics {
  ConfusionMatrix confusion{};
  std::size_t total = 0;
  double oa = 0.0;
  std::array<std::optional<double>, kNumClasses> sen{};
  std::array<std::optional<double>, kNumClasses> ppr{};

  /// {"total", "oa", "confusion", "classes": {"N": {"sen", "ppr", "support"}, ...}};
  /// undefined values are null.
  std::string to_json() const;
  /// Header "true\pred,N,S,V,F,Q" then one row per true class.
  std::string confusion_csv() const;
};

/// Throws std::invalid_argument on empty input or mismatched lengths.
Metrics compute_metrics(std::span<const AamiClass> truth, std::span<const AamiClass> predicted);

/// Arg-max class per segment in infer mode (first index on ties).
std::vector<AamiClass> predict(const Network& network, std::span<const EcgSegment> segments,
                               BinaryKernel kernel = BinaryKernel::Packed);

/// Predicts and tallies; throws std::invalid_argument on an empty set.
Metrics evaluate(const Network& network, std::span<const EcgSegment> segments);

/// Mean cross-entropy in infer mode.
Real mean_loss(const Network& network, std::span<const EcgSegment> segments);

struct LandscapeOptions {
  std::size_t resolution = 21;  // odd, so the grid has an exact center
  double scale = 1.0;           // coordinates span [-scale, scale]
  std::uint64_t seed = 1;
  std::size_t max_samples = 256;
  /// Normalize with the probe batch's own statistics instead of the running
  /// statistics, so that the loss is invariant to per-filter weight scale.
  bool batch_statistics = true;
};

struct LandscapeGrid {
  std::size_t resolution = 0;
  double scale = 0.0;
  std::uint64_t seed_x = 0;
  std::uint64_t seed_y = 0;
  std::vector<double> coords;  // shared by both axes
  std::vector<Real> loss;      // row i (x coordinate) major

  Real at(std::size_t i, std::size_t j) const { return loss[i * resolution + j]; }
  Real center() const { return at(resolution / 2, resolution / 2); }

  /// Mean of the population variances of the center row and center column.
  Real axis_variance() const;
  /// "x,y,loss" rows.
  std::string to_csv() const;
};

/// Loss over the plane spanned by two random filter-normalized directions
/// through the current conv and dense weights. The center cell is evaluated
/// at the unperturbed weights.
LandscapeGrid loss_landscape(const Network& network, std::span<const EcgSegment> samples,
                             const LandscapeOptions& options);

}  // namespace binecg
