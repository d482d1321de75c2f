#include "binecg/data.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "binecg/errors.hpp"

namespace binecg {

namespace {

constexpr char kEcg1Magic[4] = {'E', 'C', 'G', '1'};
constexpr std::uint8_t kEcg1Version = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

char class_letter(AamiClass c) noexcept {
  constexpr char letters[] = {'N', 'S', 'V', 'F', 'Q'};
  return letters[class_index(c)];
}

std::optional<AamiClass> parse_class_letter(std::string_view text) {
  text = trim(text);
  if (text.size() != 1) return std::nullopt;
  for (AamiClass c : kAllClasses) {
    if (std::toupper(static_cast<unsigned char>(text[0])) == class_letter(c)) return c;
  }
  return std::nullopt;
}

std::vector<EcgSegment> read_csv(std::istream& in) {
  std::vector<EcgSegment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      fields.push_back(trim(view.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != kSegmentLength + 1) {
      throw ParseError(line_no, "expected " + std::to_string(kSegmentLength) +
                                    " samples and a label, found " +
                                    std::to_string(fields.size() - 1) + " samples");
    }
    EcgSegment seg;
    seg.samples.resize(kSegmentLength);
    for (std::size_t i = 0; i < kSegmentLength; ++i) {
      const auto f = fields[i];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError(line_no, "field " + std::to_string(i + 1) + " is not a finite number: '" +
                                      std::string(f) + "'");
      }
      seg.samples[i] = static_cast<float>(v);
    }
    const auto label = parse_class_letter(fields.back());
    if (!label) {
      throw ParseError(line_no, "unknown class label '" + std::string(fields.back()) + "'");
    }
    seg.label = *label;
    out.push_back(std::move(seg));
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const EcgSegment> segments) {
  char buf[32];
  for (const auto& seg : segments) {
    for (float v : seg.samples) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out.put(',');
    }
    out.put(class_letter(seg.label));
    out.put('\n');
  }
}

std::vector<EcgSegment> read_ecg1(std::istream& in) {
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  constexpr std::size_t kHeader = 9;
  constexpr std::size_t kRecord = kSegmentLength * 4 + 1;

  if (size < 4 || !std::equal(kEcg1Magic, kEcg1Magic + 4, bytes.begin())) {
    throw FormatError(0, "missing ECG1 magic");
  }
  if (size < 5) throw FormatError(4, "truncated header");
  if (p[4] != kEcg1Version) {
    throw FormatError(4, "unsupported ecg1 version " + std::to_string(p[4]));
  }
  if (size < kHeader) throw FormatError(5, "truncated record count");
  const std::uint32_t count = get_u32(p + 5);
  const std::size_t expected = kHeader + static_cast<std::size_t>(count) * kRecord;
  if (size < expected) {
    const std::size_t full = (size - kHeader) / kRecord;
    throw FormatError(kHeader + full * kRecord,
                      "truncated record " + std::to_string(full) + " of " + std::to_string(count));
  }
  if (size > expected) throw FormatError(expected, "trailing bytes after last record");

  std::vector<EcgSegment> out(count);
  std::size_t off = kHeader;
  for (std::uint32_t r = 0; r < count; ++r) {
    auto& seg = out[r];
    seg.samples.resize(kSegmentLength);
    for (std::size_t i = 0; i < kSegmentLength; ++i, off += 4) {
      seg.samples[i] = std::bit_cast<float>(get_u32(p + off));
    }
    if (p[off] >= kNumClasses) {
      throw FormatError(off, "invalid class byte " + std::to_string(p[off]));
    }
    seg.label = static_cast<AamiClass>(p[off]);
    ++off;
  }
  return out;
}

void write_ecg1(std::ostream& out, std::span<const EcgSegment> segments) {
  out.write(kEcg1Magic, 4);
  out.put(static_cast<char>(kEcg1Version));
  put_u32(out, static_cast<std::uint32_t>(segments.size()));
  for (const auto& seg : segments) {
    if (seg.samples.size() != kSegmentLength) {
      throw std::invalid_argument("write_ecg1: segment does not hold " +
                                  std::to_string(kSegmentLength) + " samples");
    }
    for (float v : seg.samples) put_u32(out, std::bit_cast<std::uint32_t>(v));
    out.put(static_cast<char>(class_index(seg.label)));
  }
}

std::filesystem::path resolve_data_path(const std::filesystem::path& path) {
  if (std::filesystem::exists(path) || path.is_absolute()) return path;
  if (const char* dir = std::getenv("ECG_DATA_DIR"); dir != nullptr && *dir != '\0') {
    const auto candidate = std::filesystem::path(dir) / path;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return path;
}

std::vector<EcgSegment> load_segments(const std::filesystem::path& path,
                                      std::optional<SegmentFormat> format) {
  const auto resolved = resolve_data_path(path);
  std::ifstream in(resolved, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open data file " + resolved.string());
  if (!format) {
    char magic[4] = {};
    in.read(magic, 4);
    const bool is_ecg1 = in.gcount() == 4 && std::equal(magic, magic + 4, kEcg1Magic);
    in.clear();
    in.seekg(0);
    format = is_ecg1 ? SegmentFormat::Ecg1 : SegmentFormat::Csv;
  }
  return *format == SegmentFormat::Ecg1 ? read_ecg1(in) : read_csv(in);
}

void save_segments(const std::filesystem::path& path, std::span<const EcgSegment> segments,
                   SegmentFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write data file " + path.string());
  if (format == SegmentFormat::Ecg1) {
    write_ecg1(out, segments);
  } else {
    write_csv(out, segments);
  }
}

NormalizeResult normalize(const EcgSegment& segment) {
  NormalizeResult result{segment, false};
  const auto& x = segment.samples;
  if (x.empty()) return result;
  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (float v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  auto& y = result.segment.samples;
  if (!(var > 0.0)) {
    std::fill(y.begin(), y.end(), 0.0f);
    result.constant_signal = true;
    return result;
  }
  const double inv_sd = 1.0 / std::sqrt(var);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>((x[i] - mean) * inv_sd);
  return result;
}

ClassRatios uniform_ratios(double test_ratio) {
  ClassRatios r;
  r.fill(test_ratio);
  return r;
}

ClassRatios table1_ratios() {
  ClassRatios r{};
  r[class_index(AamiClass::F)] = 15.0 / 100.0;
  r[class_index(AamiClass::N)] = 1037.0 / 5186.0;
  r[class_index(AamiClass::Q)] = 4.0 / 19.0;
  r[class_index(AamiClass::S)] = 90.0 / 545.0;
  r[class_index(AamiClass::V)] = 402.0 / 1890.0;
  return r;
}

DatasetSplit stratified_split(std::span<const EcgSegment> segments, const ClassRatios& test_ratios,
                              std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    by_class[class_index(segments[i].label)].push_back(i);
  }
  for (AamiClass c : kAllClasses) {
    const double r = test_ratios[class_index(c)];
    if (!(r > 0.0 && r < 1.0)) {
      throw std::invalid_argument(std::string("stratified_split: test ratio for class ") +
                                  class_letter(c) + " must lie in (0, 1)");
    }
    if (by_class[class_index(c)].empty()) {
      throw std::invalid_argument(std::string("stratified_split: class ") + class_letter(c) +
                                  " has no segments");
    }
  }

  DatasetSplit split;
  split.seed = seed;
  std::mt19937_64 rng(seed);
  for (AamiClass c : kAllClasses) {
    auto& idx = by_class[class_index(c)];
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(idx.size()) * test_ratios[class_index(c)]));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < n_test ? split.test : split.train).push_back(segments[idx[k]]);
    }
    split.test_counts[class_index(c)] = n_test;
    split.train_counts[class_index(c)] = idx.size() - n_test;
  }
  return split;
}

std::vector<EcgSegment> make_synthetic_segments(const SyntheticOptions& options) {
  struct Template {
    double bpm;
    double width;      // Gaussian sigma, samples
    double amplitude;  // signed
    bool biphasic;
  };
  constexpr double kFs = 360.0;
  constexpr Template templates[kNumClasses] = {
      {75.0, 5.0, 1.0, false},    // N
      {110.0, 5.0, 0.9, false},   // S
      {75.0, 18.0, -1.3, false},  // V
      {90.0, 11.0, 1.0, false},   // F
      {50.0, 8.0, 1.0, true},     // Q
  };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<EcgSegment> out;
  out.reserve(options.per_class * kNumClasses);
  std::vector<double> x(kSegmentLength);
  for (std::size_t k = 0; k < options.per_class; ++k) {
    for (AamiClass c : kAllClasses) {
      const Template& t = templates[class_index(c)];
      const double period = kFs * 60.0 / t.bpm;
      const double wander_hz = 0.1 + 0.4 * unit(rng);
      const double wander_phase = 2.0 * std::numbers::pi * unit(rng);
      for (std::size_t i = 0; i < kSegmentLength; ++i) {
        x[i] = 0.2 * std::sin(2.0 * std::numbers::pi * wander_hz * static_cast<double>(i) / kFs +
                              wander_phase) +
               options.noise_sd * gauss(rng);
      }
      double beat = -period * unit(rng);
      while (beat < static_cast<double>(kSegmentLength) + 8.0 * t.width) {
        const double amp = t.amplitude * (1.0 + 0.1 * gauss(rng));
        const double reach = (t.biphasic ? 8.0 : 5.0) * t.width;
        const double lo = std::max(0.0, std::ceil(beat - reach));
        const double hi = std::min(static_cast<double>(kSegmentLength - 1), beat + reach);
        for (auto i = static_cast<std::size_t>(lo); static_cast<double>(i) <= hi; ++i) {
          const double d = (static_cast<double>(i) - beat) / t.width;
          double v = std::exp(-0.5 * d * d);
          if (t.biphasic) {
            const double d2 = (static_cast<double>(i) - beat - 3.0 * t.width) / t.width;
            v -= std::exp(-0.5 * d2 * d2);
          }
          x[i] += amp * v;
        }
        beat += period * (1.0 + 0.03 * gauss(rng));
      }
      EcgSegment seg;
      seg.label = c;
      seg.samples.resize(kSegmentLength);
      std::transform(x.begin(), x.end(), seg.samples.begin(),
                     [](double v) { return static_cast<float>(v); });
      out.push_back(normalize(seg).segment);
    }
  }
  return out;
}

Batch to_batch(std::span<const EcgSegment> segments) {
  Batch b(segments.size(), 1, kSegmentLength);
  for (std::size_t n = 0; n < segments.size(); ++n) {
    if (segments[n].samples.size() != kSegmentLength) {
      throw std::invalid_argument("to_batch: segment " + std::to_string(n) + " has " +
                                  std::to_string(segments[n].samples.size()) + " samples");
    }
    std::copy(segments[n].samples.begin(), segments[n].samples.end(), b.sample(n).begin());
  }
  return b;
}

Batch to_batch(std::span<const EcgSegment> segments, std::span<const std::size_t> indices) {
  Batch b(indices.size(), 1, kSegmentLength);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const auto& s = segments[indices[n]].samples;
    if (s.size() != kSegmentLength) {
      throw std::invalid_argument("to_batch: segment " + std::to_string(indices[n]) + " has " +
                                  std::to_string(s.size()) + " samples");
    }
    std::copy(s.begin(), s.end(), b.sample(n).begin());
  }
  return b;
}

}  // namespace binecg
