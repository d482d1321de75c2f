#include "binecg/weights_io.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <functional>
#include <iterator>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "binecg/bits.hpp"
#include "binecg/errors.hpp"

namespace binecg {
namespace {

constexpr char kMagic[4] = {'B', 'E', 'C', 'G'};

enum RecordKind : std::uint8_t {
  kConvReal = 0x01,
  kConvBinary = 0x02,
  kBatchNorm = 0x03,
  kDenseReal = 0x04,
  kDenseBinary = 0x05,
  kThreshold = 0x06,
};

struct Record {
  std::uint8_t kind = 0;
  std::vector<std::uint32_t> shape;
  std::vector<float> reals;  // for binary records: the signs, +-1
};

std::size_t header_fields(std::uint8_t kind) {
  switch (kind) {
    case kConvReal:
    case kConvBinary: return 5;
    case kDenseReal:
    case kDenseBinary: return 2;
    case kBatchNorm:
    case kThreshold: return 1;
  }
  return 0;
}

std::size_t payload_reals(const Record& r) {
  switch (r.kind) {
    case kConvReal:
    case kConvBinary: return std::size_t{r.shape[0]} * r.shape[1] * r.shape[2];
    case kDenseReal:
    case kDenseBinary: return std::size_t{r.shape[0]} * r.shape[1];
    case kBatchNorm: return 4 * std::size_t{r.shape[0]};
    case kThreshold: return r.shape[0];
  }
  return 0;
}

bool binary_record(std::uint8_t kind) { return kind == kConvBinary || kind == kDenseBinary; }

std::vector<float> signs_of(std::span<const float> w) {
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<float>(sign_binarize(w[i]));
  return out;
}

std::vector<Record> extract(const Network& net) {
  std::vector<Record> out;
  for (const Layer& layer : net.layers()) {
    if (const auto* c = std::get_if<Conv1d>(&layer)) {
      const auto& g = c->geometry();
      Record r{c->binarized() ? kConvBinary : kConvReal,
               {static_cast<std::uint32_t>(g.out_channels), static_cast<std::uint32_t>(g.in_channels),
                static_cast<std::uint32_t>(g.kernel), static_cast<std::uint32_t>(g.stride),
                static_cast<std::uint32_t>(g.padding)},
               {}};
      r.reals = c->binarized() ? signs_of(c->weights())
                               : std::vector<float>(c->weights().begin(), c->weights().end());
      out.push_back(std::move(r));
    } else if (const auto* bn = std::get_if<BatchNorm1d>(&layer)) {
      Record r{kBatchNorm, {static_cast<std::uint32_t>(bn->channels())}, {}};
      for (auto s : {bn->gamma(), bn->beta(), bn->running_mean(), bn->running_var()}) {
        r.reals.insert(r.reals.end(), s.begin(), s.end());
      }
      out.push_back(std::move(r));
    } else if (const auto* sg = std::get_if<SignActivation>(&layer)) {
      if (sg->learnable()) {
        out.push_back({kThreshold,
                       {static_cast<std::uint32_t>(sg->channels())},
                       {sg->alpha().begin(), sg->alpha().end()}});
      }
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      Record r{d->binarized() ? kDenseBinary : kDenseReal,
               {static_cast<std::uint32_t>(d->out_features()),
                static_cast<std::uint32_t>(d->in_features())},
               {}};
      r.reals = d->binarized() ? signs_of(d->weights())
                               : std::vector<float>(d->weights().begin(), d->weights().end());
      out.push_back(std::move(r));
      if (!d->output_thresholds().empty()) {
        out.push_back({kThreshold,
                       {static_cast<std::uint32_t>(d->output_thresholds().size())},
                       {d->output_thresholds().begin(), d->output_thresholds().end()}});
      }
    }
  }
  return out;
}

using Fail = std::function<void(std::size_t record, const std::string&)>;

/// Builds a fresh network of `kind` and overwrites its state with `records`,
/// which must match the layout extract() produces for that kind.
Network apply(ModelKind kind, const std::vector<Record>& records, const Fail& fail) {
  Network net = build_model(kind, 0);
  const std::vector<Record> expected = extract(net);
  if (records.size() != expected.size()) {
    fail(std::min(records.size(), expected.size()),
         "expected " + std::to_string(expected.size()) + " records for model " +
             std::string(model_name(kind)) + ", found " + std::to_string(records.size()));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].kind != expected[i].kind || records[i].shape != expected[i].shape) {
      fail(i, "record " + std::to_string(i) + " does not match the " +
                  std::string(model_name(kind)) + " layout");
    }
    if (records[i].reals.size() != expected[i].reals.size()) {
      fail(i, "record " + std::to_string(i) + " has a wrong payload size");
    }
  }

  std::size_t next = 0;
  auto copy = [&](std::span<float> dst, std::size_t& pos) {
    const auto& src = records[next].reals;
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(pos),
              src.begin() + static_cast<std::ptrdiff_t>(pos + dst.size()), dst.begin());
    pos += dst.size();
  };
  for (Layer& layer : net.layers()) {
    std::size_t pos = 0;
    if (auto* c = std::get_if<Conv1d>(&layer)) {
      copy(c->weights(), pos);
      ++next;
    } else if (auto* bn = std::get_if<BatchNorm1d>(&layer)) {
      copy(bn->gamma(), pos);
      copy(bn->beta(), pos);
      copy(bn->running_mean(), pos);
      copy(bn->running_var(), pos);
      ++next;
    } else if (auto* sg = std::get_if<SignActivation>(&layer)) {
      if (sg->learnable()) {
        copy(sg->alpha(), pos);
        ++next;
      }
    } else if (auto* d = std::get_if<Dense>(&layer)) {
      copy(d->weights(), pos);
      ++next;
      if (!d->output_thresholds().empty()) {
        pos = 0;
        copy(d->output_thresholds(), pos);
        ++next;
      }
    }
  }
  return net;
}

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::make_unsigned_t<T>;
  const U u = static_cast<U>(v);
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == bytes_.size(); }

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw FormatError(pos_, std::string("truncated file while reading ") + what);
    }
    std::make_unsigned_t<T> u = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + b]))
           << (8 * b);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  const std::string& bytes() const noexcept { return bytes_; }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string encode(ModelKind kind, const std::vector<Record>& records) {
  std::string out(kMagic, kMagic + 4);
  put_u8(out, kWeightFileVersion);
  put_u8(out, static_cast<std::uint8_t>(kind));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const Record& r : records) {
    put_u8(out, r.kind);
    for (std::uint32_t v : r.shape) put_le<std::uint32_t>(out, v);
    if (binary_record(r.kind)) {
      const std::size_t rows = r.shape[0];
      const std::size_t len = r.reals.size() / rows;
      std::vector<Real> signs(len);
      std::vector<Word> words(words_for_bits(len));
      for (std::size_t o = 0; o < rows; ++o) {
        for (std::size_t i = 0; i < len; ++i) signs[i] = r.reals[o * len + i];
        pack_row(signs, words);
        for (Word w : words) put_le<std::uint64_t>(out, w);
      }
    } else {
      for (float v : r.reals) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  return out;
}

ModelKind kind_from_byte(std::uint8_t b, std::size_t offset) {
  if (b > static_cast<std::uint8_t>(ModelKind::BTPNAlpha)) {
    throw FormatError(offset, "unknown model kind " + std::to_string(b));
  }
  return static_cast<ModelKind>(b);
}

Network decode(std::string bytes) {
  Reader in(std::move(bytes));
  if (in.bytes().size() < 4 || !std::equal(kMagic, kMagic + 4, in.bytes().begin())) {
    throw FormatError(0, "missing BECG magic");
  }
  for (int i = 0; i < 4; ++i) in.get<std::uint8_t>("magic");
  const std::size_t version_at = in.offset();
  const auto version = in.get<std::uint8_t>("version");
  if (version != kWeightFileVersion) {
    throw FormatError(version_at, "unsupported weight file version " + std::to_string(version));
  }
  const std::size_t kind_at = in.offset();
  const ModelKind kind = kind_from_byte(in.get<std::uint8_t>("model kind"), kind_at);
  const auto count = in.get<std::uint32_t>("record count");

  std::vector<Record> records;
  std::vector<std::size_t> offsets;
  for (std::uint32_t n = 0; n < count; ++n) {
    offsets.push_back(in.offset());
    Record r;
    r.kind = in.get<std::uint8_t>("record kind");
    const std::size_t fields = header_fields(r.kind);
    if (fields == 0) {
      throw FormatError(offsets.back(), "unknown record kind " + std::to_string(r.kind));
    }
    for (std::size_t f = 0; f < fields; ++f) {
      const std::size_t at = in.offset();
      r.shape.push_back(in.get<std::uint32_t>("record shape"));
      if (r.shape.back() > (1u << 20)) throw FormatError(at, "implausible record dimension");
    }
    const std::size_t n_reals = payload_reals(r);
    const std::size_t remaining = in.bytes().size() - in.offset();
    if (binary_record(r.kind)) {
      const std::size_t rows = r.shape[0];
      const std::size_t len = rows == 0 ? 0 : n_reals / rows;
      const std::size_t wpr = words_for_bits(len);
      if (rows * wpr * sizeof(Word) > remaining) {
        throw FormatError(in.offset(), "truncated file while reading packed weights");
      }
      r.reals.reserve(n_reals);
      std::vector<Word> words(wpr);
      for (std::size_t o = 0; o < rows; ++o) {
        for (Word& w : words) w = in.get<std::uint64_t>("packed weights");
        for (Real v : unpack_bits({words, len}, len)) r.reals.push_back(static_cast<float>(v));
      }
    } else {
      if (n_reals * 4 > remaining) {
        throw FormatError(in.offset(), "truncated file while reading real payload");
      }
      r.reals.reserve(n_reals);
      for (std::size_t i = 0; i < n_reals; ++i) {
        r.reals.push_back(std::bit_cast<float>(in.get<std::uint32_t>("real payload")));
      }
    }
    records.push_back(std::move(r));
  }
  if (!in.done()) throw FormatError(in.offset(), "trailing bytes after last record");
  return apply(kind, records, [&](std::size_t rec, const std::string& msg) {
    throw FormatError(rec < offsets.size() ? offsets[rec] : in.offset(), msg);
  });
}

const char* record_name(std::uint8_t kind) {
  switch (kind) {
    case kConvReal: return "conv";
    case kConvBinary: return "conv_binary";
    case kBatchNorm: return "batchnorm";
    case kDenseReal: return "dense";
    case kDenseBinary: return "dense_binary";
    case kThreshold: return "threshold";
  }
  return "unknown";
}

}  // namespace

void save_weights(std::ostream& out, const Network& network) {
  const std::string bytes = encode(network.spec().kind, extract(network));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Network load_weights(std::istream& in) {
  return decode(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

void save_weights(const std::filesystem::path& path, const Network& network) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weight file " + path.string());
  save_weights(out, network);
}

Network load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file " + path.string());
  return load_weights(in);
}

std::string weights_to_json(const Network& network) {
  nlohmann::json j;
  j["format"] = "BECG";
  j["version"] = kWeightFileVersion;
  j["model"] = std::string(model_name(network.spec().kind));
  nlohmann::json recs = nlohmann::json::array();
  for (const Record& r : extract(network)) {
    recs.push_back({{"kind", record_name(r.kind)}, {"shape", r.shape}, {"values", r.reals}});
  }
  j["records"] = recs;
  return j.dump() + "\n";
}

Network weights_from_json(std::string_view text) {
  auto fail = [](const std::string& msg) -> void { throw ParseError(1, "weights json: " + msg); };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("weights json: ") + e.what());
  }
  try {
    if (j.value("format", "") != "BECG") fail("missing format tag");
    if (j.at("version").get<int>() != kWeightFileVersion) fail("unsupported version");
    const auto kind = parse_model_kind(j.at("model").get<std::string>());
    if (!kind) fail("unknown model " + j.at("model").get<std::string>());
    std::vector<Record> records;
    for (const auto& jr : j.at("records")) {
      Record r;
      const std::string name = jr.at("kind").get<std::string>();
      for (std::uint8_t k = kConvReal; k <= kThreshold; ++k) {
        if (name == record_name(k)) r.kind = k;
      }
      if (r.kind == 0) fail("unknown record kind " + name);
      r.shape = jr.at("shape").get<std::vector<std::uint32_t>>();
      r.reals = jr.at("values").get<std::vector<float>>();
      if (binary_record(r.kind)) {
        for (float v : r.reals) {
          if (v != 1.0f && v != -1.0f) fail("binary record holds a value other than +-1");
        }
      }
      records.push_back(std::move(r));
    }
    return apply(*kind, records, [&](std::size_t, const std::string& msg) { fail(msg); });
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("weights json: ") + e.what());
  }
}

}  // namespace binecg
