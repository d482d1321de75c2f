#include <gtest/gtest.h>

#include <random>

#include "binecg/bits.hpp"
#include "binecg/tensor.hpp"

using namespace binecg;

namespace {

std::vector<Real> random_bipolar(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  std::vector<Real> v(n);
  for (auto& x : v) x = coin(rng) ? 1.0 : -1.0;
  return v;
}

std::int64_t brute_dot(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return static_cast<std::int64_t>(s);
}

}  // namespace

TEST(Tensor1D, ShapeAndAccess) {
  Tensor1D t(2, 3, 1.5);
  EXPECT_EQ(t.size(), 6u);
  t(1, 2) = -4.0;
  EXPECT_EQ(t.row(1)[2], -4.0);
  EXPECT_TRUE(t.all_finite());
  EXPECT_THROW(Tensor1D(0, 3), std::invalid_argument);
  EXPECT_THROW(Tensor1D(2, 2, std::vector<Real>(3)), std::invalid_argument);
}

TEST(Batch, ReshapeKeepsStorage) {
  Batch b(2, 3, 4);
  for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = static_cast<Real>(i);
  const Batch f = b.flattened();
  EXPECT_EQ(f.channels(), 12u);
  EXPECT_EQ(f.length(), 1u);
  EXPECT_EQ(f.at(1, 5, 0), b.at(1, 1, 1));
  EXPECT_THROW(b.reshaped(5, 2), std::invalid_argument);
}

TEST(PackBits, LowNibbleEncoding) {
  const std::vector<Real> v{+1, +1, -1, -1};
  const auto p = pack_bits(v);
  EXPECT_EQ(p.words()[0], 0b0011u);
}

TEST(PackBits, AllOnesWord) {
  const auto p = pack_bits(std::vector<Real>(64, 1.0));
  ASSERT_EQ(p.words().size(), 1u);
  EXPECT_EQ(p.words()[0], ~Word{0});
}

TEST(PackBits, RejectsNonBipolar) {
  EXPECT_THROW(pack_bits(std::vector<Real>{1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(pack_bits(std::vector<Real>{1.0, -0.5}), std::invalid_argument);
}

TEST(UnpackBits, Examples) {
  PackedBitTensor p(1, 4);
  p.row_words(0)[0] = 0b1010;
  EXPECT_EQ(unpack_bits(p.row(0), 4), (std::vector<Real>{-1, +1, -1, +1}));
  EXPECT_TRUE(unpack_bits(p.row(0), 0).empty());
  EXPECT_THROW(unpack_bits(p.row(0), 65), std::invalid_argument);
}

TEST(PackBits, RoundTripRandom100) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = random_bipolar(rng, 100);
    const auto p = pack_bits(v);
    EXPECT_TRUE(p.padding_is_clear());
    ASSERT_EQ(unpack_bits(p.row(0), 100), v);
  }
}

TEST(PackBits, RoundTripAllAlignments) {
  std::mt19937_64 rng(12);
  for (std::size_t n = 0; n <= 4 * kWordBits + 3; ++n) {
    const auto v = random_bipolar(rng, n);
    const auto p = pack_bits(v);
    EXPECT_EQ(p.words().size(), words_for_bits(n));
    EXPECT_TRUE(p.padding_is_clear()) << n;
    ASSERT_EQ(unpack_bits(p.row(0), n), v) << n;
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(p.bit(0, i), v[i] > 0);
  }
}

TEST(XnorDot, Examples) {
  const auto a = pack_bits(std::vector<Real>{+1, +1, -1, -1});
  const auto b = pack_bits(std::vector<Real>{+1, -1, -1, +1});
  EXPECT_EQ(xnor_popcount_dot(a.row(0), b.row(0), 4), 0);
  std::mt19937_64 rng(1);
  const auto c = pack_bits(random_bipolar(rng, 64));
  EXPECT_EQ(xnor_popcount_dot(c.row(0), c.row(0), 64), 64);
}

TEST(XnorDot, MismatchedLengthThrows) {
  const auto a = pack_bits(std::vector<Real>(10, 1.0));
  const auto b = pack_bits(std::vector<Real>(11, 1.0));
  EXPECT_THROW(xnor_popcount_dot(a.row(0), b.row(0), 10), std::invalid_argument);
  EXPECT_THROW(xnor_popcount_dot(a.row(0), a.row(0), 9), std::invalid_argument);
}

TEST(XnorDot, MatchesBruteForce) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(0, 512);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = len(rng);
    const auto a = random_bipolar(rng, n);
    const auto b = random_bipolar(rng, n);
    const auto pa = pack_bits(a);
    const auto pb = pack_bits(b);
    ASSERT_EQ(xnor_popcount_dot(pa.row(0), pb.row(0), n), brute_dot(a, b)) << "n=" << n;
  }
}

TEST(XnorDot, PaddingCorruptionIsMaskedAndClearable) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 37u, 63u, 65u, 100u, 200u}) {
    const auto a = random_bipolar(rng, n);
    const auto b = random_bipolar(rng, n);
    auto pa = pack_bits(a);
    const auto pb = pack_bits(b);
    const std::int64_t expected = brute_dot(a, b);
    auto last = pa.row_words(0);
    last[last.size() - 1] |= ~tail_mask(n);
    EXPECT_FALSE(pa.padding_is_clear());
    EXPECT_EQ(xnor_popcount_dot(pa.row(0), pb.row(0), n), expected);
    pa.clear_padding();
    EXPECT_TRUE(pa.padding_is_clear());
    EXPECT_EQ(unpack_bits(pa.row(0), n), a);
    EXPECT_EQ(xnor_popcount_dot(pa.row(0), pb.row(0), n), expected);
  }
}

TEST(PackedBitTensor, RowsAreWordAligned) {
  PackedBitTensor t(3, 70);
  EXPECT_EQ(t.words_per_row(), 2u);
  t.set_bit(2, 69, true);
  EXPECT_TRUE(t.bit(2, 69));
  EXPECT_FALSE(t.bit(1, 69));
  EXPECT_EQ(t.row(2).words[1], Word{1} << 5);
}
