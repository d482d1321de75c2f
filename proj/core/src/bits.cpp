#include "binecg/bits.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace binecg {

PackedBitTensor::PackedBitTensor(std::size_t rows, std::size_t length)
    : rows_(rows),
      length_(length),
      words_per_row_(words_for_bits(length)),
      words_(rows * words_for_bits(length), Word{0}) {}

void PackedBitTensor::set_bit(std::size_t r, std::size_t i, bool value) {
  Word& w = words_[r * words_per_row_ + i / kWordBits];
  const Word m = Word{1} << (i % kWordBits);
  w = value ? (w | m) : (w & ~m);
}

void PackedBitTensor::clear_padding() noexcept {
  if (words_per_row_ == 0) return;
  const Word mask = tail_mask(length_);
  for (std::size_t r = 0; r < rows_; ++r) {
    words_[(r + 1) * words_per_row_ - 1] &= mask;
  }
}

bool PackedBitTensor::padding_is_clear() const noexcept {
  if (words_per_row_ == 0) return true;
  const Word mask = tail_mask(length_);
  for (std::size_t r = 0; r < rows_; ++r) {
    if (words_[(r + 1) * words_per_row_ - 1] & ~mask) return false;
  }
  return true;
}

void pack_row(std::span<const Real> signs, std::span<Word> out) {
  const std::size_t nwords = words_for_bits(signs.size());
  if (out.size() < nwords) {
    throw std::invalid_argument("pack_row: output buffer too small");
  }
  for (std::size_t w = 0; w < nwords; ++w) out[w] = 0;
  for (std::size_t i = 0; i < signs.size(); ++i) {
    const Real v = signs[i];
    if (v == 1.0) {
      out[i / kWordBits] |= Word{1} << (i % kWordBits);
    } else if (v != -1.0) {
      throw std::invalid_argument("pack_bits: element " + std::to_string(i) +
                                  " is not bipolar (" + std::to_string(v) + ")");
    }
  }
}

PackedBitTensor pack_bits(std::span<const Real> signs) {
  PackedBitTensor out(1, signs.size());
  pack_row(signs, out.row_words(0));
  return out;
}

std::vector<Real> unpack_bits(PackedRowView row, std::size_t n) {
  if (n > row.length || words_for_bits(n) > row.words.size()) {
    throw std::invalid_argument("unpack_bits: requested " + std::to_string(n) +
                                " bits from a row of " + std::to_string(row.length));
  }
  std::vector<Real> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = ((row.words[i / kWordBits] >> (i % kWordBits)) & 1u) ? 1.0 : -1.0;
  }
  return out;
}

std::int64_t xnor_popcount_dot(PackedRowView a, PackedRowView b, std::size_t n) {
  if (a.length != n || b.length != n) {
    throw std::invalid_argument("xnor_popcount_dot: operand lengths " + std::to_string(a.length) +
                                "/" + std::to_string(b.length) + " do not match n=" +
                                std::to_string(n));
  }
  const std::size_t nwords = words_for_bits(n);
  if (a.words.size() < nwords || b.words.size() < nwords) {
    throw std::invalid_argument("xnor_popcount_dot: row storage shorter than n bits");
  }
  if (nwords == 0) return 0;
  std::int64_t agree = 0;
  for (std::size_t w = 0; w + 1 < nwords; ++w) {
    agree += std::popcount(~(a.words[w] ^ b.words[w]));
  }
  agree += std::popcount(~(a.words[nwords - 1] ^ b.words[nwords - 1]) & tail_mask(n));
  return 2 * agree - static_cast<std::int64_t>(n);
}

}  // namespace binecg
