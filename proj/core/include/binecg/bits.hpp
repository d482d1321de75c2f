#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "binecg/tensor.hpp"

namespace binecg {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_bits(std::size_t bits) noexcept {
  return (bits + kWordBits - 1) / kWordBits;
}

/// Read-only view of one packed row: `length` logical bits, bit i of the row
/// lives in words[i / 64] at position i % 64. Bit 1 encodes +1, bit 0 encodes -1.
struct PackedRowView {
  std::span<const Word> words;
  std::size_t length = 0;
};

/// Bipolar values packed one bit per element. Each row starts on a word
/// boundary and its trailing padding bits are zero.
class PackedBitTensor {
 public:
  PackedBitTensor() = default;
  PackedBitTensor(std::size_t rows, std::size_t length);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t words_per_row() const noexcept { return words_per_row_; }

  PackedRowView row(std::size_t r) const {
    return {{words_.data() + r * words_per_row_, words_per_row_}, length_};
  }
  std::span<Word> row_words(std::size_t r) {
    return {words_.data() + r * words_per_row_, words_per_row_};
  }

  std::span<const Word> words() const noexcept { return words_; }
  std::span<Word> words() noexcept { return words_; }

  /// Bit value (+1 -> true) of element `i` in row `r`.
  bool bit(std::size_t r, std::size_t i) const {
    return (words_[r * words_per_row_ + i / kWordBits] >> (i % kWordBits)) & 1u;
  }
  void set_bit(std::size_t r, std::size_t i, bool value);

  /// Zeroes the padding bits of every row.
  void clear_padding() noexcept;
  bool padding_is_clear() const noexcept;

  friend bool operator==(const PackedBitTensor&, const PackedBitTensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t length_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<Word> words_;
};

/// Mask selecting the logical bits of the last word of an `n`-bit row.
constexpr Word tail_mask(std::size_t n) noexcept {
  const std::size_t rem = n % kWordBits;
  return rem == 0 ? ~Word{0} : ((Word{1} << rem) - 1);
}

/// Packs a bipolar vector into a single row. Throws std::invalid_argument on
/// any value other than -1 or +1.
PackedBitTensor pack_bits(std::span<const Real> signs);

/// Packs into caller-provided words (size >= words_for_bits(signs.size())).
void pack_row(std::span<const Real> signs, std::span<Word> out);

/// Inverse of pack_bits on the first `n` bits of `row`.
std::vector<Real> unpack_bits(PackedRowView row, std::size_t n);

/// 2 * popcount(XNOR(a, b)) - n: the dot product of two bipolar vectors.
std::int64_t xnor_popcount_dot(PackedRowView a, PackedRowView b, std::size_t n);

}  // namespace binecg
