#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "binecg/model.hpp"
#include "binecg/tensor.hpp"

namespace binecg {

/// AAMI heartbeat classes, in label-index order.
enum class AamiClass : std::uint8_t { N = 0, S = 1, V = 2, F = 3, Q = 4 };

inline constexpr AamiClass kAllClasses[] = {AamiClass::N, AamiClass::S, AamiClass::V, AamiClass::F,
                                            AamiClass::Q};

char class_letter(AamiClass c) noexcept;
std::optional<AamiClass> parse_class_letter(std::string_view text);
constexpr std::size_t class_index(AamiClass c) noexcept { return static_cast<std::size_t>(c); }

/// 10 s of single-lead ECG at 360 Hz.
struct EcgSegment {
  std::vector<float> samples;
  AamiClass label = AamiClass::N;

  friend bool operator==(const EcgSegment&, const EcgSegment&) = default;
};

enum class SegmentFormat { Csv, Ecg1 };

/// CSV: one segment per line, 3600 numeric fields followed by the class
/// letter. Blank lines and lines starting with '#' are skipped.
std::vector<EcgSegment> read_csv(std::istream& in);
void write_csv(std::ostream& out, std::span<const EcgSegment> segments);

/// ecg1: "ECG1", version byte (1), u32 LE record count, then per record
/// 3600 little-endian IEEE-754 float32 samples and one label byte (class index).
std::vector<EcgSegment> read_ecg1(std::istream& in);
void write_ecg1(std::ostream& out, std::span<const EcgSegment> segments);

/// Loads a file, detecting the format from the ecg1 magic when not given.
/// Relative paths that do not exist are retried under $ECG_DATA_DIR.
std::vector<EcgSegment> load_segments(const std::filesystem::path& path,
                                      std::optional<SegmentFormat> format = std::nullopt);
void save_segments(const std::filesystem::path& path, std::span<const EcgSegment> segments,
                   SegmentFormat format);

std::filesystem::path resolve_data_path(const std::filesystem::path& path);

struct NormalizeResult {
  EcgSegment segment;
  bool constant_signal = false;  // the signal had zero variance and was zeroed
};

/// Per-segment z-score (population standard deviation).
NormalizeResult normalize(const EcgSegment& segment);

/// Test fraction per class, indexed by class_index().
using ClassRatios = std::array<double, kNumClasses>;

ClassRatios uniform_ratios(double test_ratio);

/// Per-class test fractions that reproduce the published split counts
/// (F 15/100, N 1037/5186, Q 4/19, S 90/545, V 402/1890).
ClassRatios table1_ratios();

struct DatasetSplit {
  std::vector<EcgSegment> train;
  std::vector<EcgSegment> test;
  std::uint64_t seed = 0;
  std::array<std::size_t, kNumClasses> train_counts{};
  std::array<std::size_t, kNumClasses> test_counts{};
};

/// Shuffles each class with `seed` and moves round(n_c * ratio_c) of it to
/// the test set. Throws std::invalid_argument naming any class with no segments.
DatasetSplit stratified_split(std::span<const EcgSegment> segments, const ClassRatios& test_ratios,
                              std::uint64_t seed);

/// Generator for the synthetic benchmark set. Each class is a pulse train with
/// its own rate and pulse width (N: 75 bpm narrow, S: 110 bpm narrow, V: 75 bpm
/// wide inverted, F: 90 bpm medium, Q: 50 bpm biphasic), with beat-to-beat
/// jitter, amplitude jitter, baseline wander and white noise. Segments are
/// z-score normalized.
struct SyntheticOptions {
  std::size_t per_class = 120;
  std::uint64_t seed = 20240501;
  double noise_sd = 0.15;
};

std::vector<EcgSegment> make_synthetic_segments(const SyntheticOptions& options);

/// Stacks segments into a (n, 1, 3600) batch.
Batch to_batch(std::span<const EcgSegment> segments);
Batch to_batch(std::span<const EcgSegment> segments, std::span<const std::size_t> indices);

}  // namespace binecg
