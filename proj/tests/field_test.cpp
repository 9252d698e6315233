#include "keyneg/field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "keyneg/bytes.hpp"

namespace keyneg {
namespace {

using u128 = unsigned __int128;

bool trial_division_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

TEST(IsPrime, MatchesTrialDivisionBelowTenThousand) {
  for (std::uint64_t n = 0; n < 10000; ++n) EXPECT_EQ(is_prime(n), trial_division_prime(n)) << n;
}

TEST(IsPrime, KnownLargeValues) {
  EXPECT_TRUE(is_prime(kMersenne61));
  EXPECT_TRUE(is_prime(18446744073709551557ull));  // largest 64-bit prime
  EXPECT_FALSE(is_prime(kMersenne61 - 2));          // 29 * 79511827903920481
  EXPECT_FALSE(is_prime(3215031751ull));            // strong pseudoprime to bases 2, 3, 5, 7
  EXPECT_FALSE(is_prime(std::numeric_limits<std::uint64_t>::max()));
}

TEST(FieldParams, RejectsCompositeModulus) {
  EXPECT_THROW(FieldParams(100), std::invalid_argument);
  EXPECT_THROW(FieldParams(1), std::invalid_argument);
  EXPECT_NO_THROW(FieldParams(97));
}

TEST(FieldParams, NodeCountMustBeInvertible) {
  const FieldParams f(97);
  EXPECT_NO_THROW(f.require_node_count(96));
  EXPECT_THROW(f.require_node_count(97), std::invalid_argument);
  EXPECT_THROW(f.require_node_count(0), std::invalid_argument);
}

TEST(FieldParams, SmallModulusArithmetic) {
  const FieldParams f(97);
  EXPECT_EQ(f.add(90, 10), 3u);
  EXPECT_EQ(f.sub(3, 10), 90u);
  EXPECT_EQ(f.mul(50, 50), 2500u % 97);
  EXPECT_EQ(f.mul(f.inverse(3), 3), 1u);
  EXPECT_EQ(f.inverse(3), 65u);
  EXPECT_THROW(f.inverse(0), std::invalid_argument);
}

class FieldOracle : public ::testing::TestWithParam<std::uint64_t> {};

// 128-bit arithmetic straight from the definitions is the reference.
TEST_P(FieldOracle, AgreesWithWideArithmetic) {
  const FieldParams f(GetParam());
  const std::uint64_t q = f.q();
  std::mt19937_64 gen(GetParam());
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t a = gen() % q, b = gen() % q;
    ASSERT_EQ(f.add(a, b), static_cast<std::uint64_t>((u128{a} + b) % q));
    ASSERT_EQ(f.sub(a, b), static_cast<std::uint64_t>((u128{a} + q - b) % q));
    ASSERT_EQ(f.mul(a, b), static_cast<std::uint64_t>((u128{a} * b) % q));
    if (a != 0) ASSERT_EQ(static_cast<std::uint64_t>((u128{f.inverse(a)} * a) % q), 1u);
  }
}

INSTANTIATE_TEST_SUITE_P(Moduli, FieldOracle,
                         ::testing::Values(97ull, 65537ull, kMersenne61, 18446744073709551557ull));

TEST(FieldVector, RejectsUnreducedElements) {
  const FieldParams f(97);
  EXPECT_THROW(FieldVector(f, {1, 97}), std::invalid_argument);
  EXPECT_NO_THROW(FieldVector(f, {0, 96}));
}

TEST(FieldVector, ElementwiseOps) {
  const FieldParams f(97);
  const FieldVector a(f, {10, 90, 0});
  const FieldVector b(f, {95, 10, 1});
  EXPECT_EQ(add(a, b), FieldVector(f, {8, 3, 1}));
  EXPECT_EQ(sub(a, b), FieldVector(f, {12, 80, 96}));
  EXPECT_EQ(scale_by_inverse(FieldVector(f, {3, 6}), 3), FieldVector(f, {1, 2}));
  FieldVector acc = a;
  accumulate(acc, b);
  EXPECT_EQ(acc, add(a, b));
}

TEST(FieldVector, MismatchedShapesAreRejected) {
  const FieldParams f(97);
  EXPECT_THROW(add(FieldVector(f, {1}), FieldVector(f, {1, 2})), std::invalid_argument);
  EXPECT_THROW(add(FieldVector(f, {1}), FieldVector(FieldParams(101), {1})), std::invalid_argument);
  EXPECT_THROW(sum(std::span<const FieldVector>{}), std::invalid_argument);
}

TEST(FieldVector, SumOfThreeWithWrap) {
  const FieldParams f(97);
  const std::vector<FieldVector> v{FieldVector(f, {50}), FieldVector(f, {50}), FieldVector(f, {0})};
  EXPECT_EQ(sum(v), FieldVector(f, {3}));
}

TEST(FieldVector, WipeClearsStorage) {
  FieldVector v(FieldParams(97), {1, 2, 3});
  v.wipe();
  EXPECT_EQ(v.size(), 0u);
}

TEST(CanonicalEncoding, LayoutAndRoundTrip) {
  const FieldParams f(97);
  const FieldVector v(f, {1, 96});
  const Bytes b = canonical_bytes(v);
  EXPECT_EQ(to_hex(b), "02000000000000000100000000000000" "6000000000000000");
  ByteReader r(b);
  EXPECT_EQ(read_field_vector(r, f), v);
  EXPECT_TRUE(r.done());
}

TEST(CanonicalEncoding, RejectsResidueAtModulus) {
  const Bytes b = from_hex("01000000000000006100000000000000");  // one element, 97
  ByteReader r(b);
  EXPECT_THROW(read_field_vector(r, FieldParams(97)), std::invalid_argument);
}

TEST(FixedPoint, PositiveAndNegativeValues) {
  const auto codec = FixedPointCodec::defaults();
  const FieldParams f;
  const std::vector<double> x{1.5, -2.25, 0.0};
  const FieldVector e = encode(x, codec, f);
  EXPECT_EQ(e[0], 98304u);
  EXPECT_EQ(e[1], f.q() - 147456u);
  EXPECT_EQ(e[2], 0u);
  EXPECT_EQ(decode(e, codec), x);
}

TEST(FixedPoint, ClippingIsCountedNotFatal) {
  const auto codec = FixedPointCodec::defaults();
  const FieldParams f;
  std::size_t clipped = 0;
  const std::vector<double> x{300.0, -1000.0, std::nan(""), 1.0};
  const auto back = decode(encode(x, codec, f, &clipped), codec);
  EXPECT_EQ(clipped, 3u);
  EXPECT_DOUBLE_EQ(back[0], 256.0);
  EXPECT_DOUBLE_EQ(back[1], -256.0);
  EXPECT_DOUBLE_EQ(back[2], 0.0);
  EXPECT_DOUBLE_EQ(back[3], 1.0);
}

TEST(FixedPoint, SumOfEncodingsDecodesToRealSum) {
  const auto codec = FixedPointCodec::defaults();
  const FieldParams f;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-256.0, 256.0);
  const std::size_t m = 1000, len = 8;
  std::vector<double> total(len, 0.0);
  FieldVector acc = FieldVector::zeros(f, len);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> x(len);
    for (auto& v : x) v = dist(gen);
    for (std::size_t k = 0; k < len; ++k) total[k] += x[k];
    accumulate(acc, encode(x, codec, f));
  }
  const auto got = decode(acc, codec);
  for (std::size_t k = 0; k < len; ++k)
    EXPECT_LE(std::abs(got[k] - total[k]), static_cast<double>(m) / codec.scale());
}

TEST(FixedPoint, HeadroomCheck) {
  EXPECT_NO_THROW(FixedPointCodec::defaults().check_headroom(FieldParams()));
  // 1024 * 256 * 65536 = 2^34 does not fit under 2^31 / 2.
  EXPECT_THROW(FixedPointCodec::defaults().check_headroom(FieldParams(2147483647)), std::invalid_argument);
}

TEST(Centered, LiftsUpperHalfToNegatives) {
  EXPECT_EQ(centered(0, 97), 0);
  EXPECT_EQ(centered(48, 97), 48);
  EXPECT_EQ(centered(49, 97), -48);
  EXPECT_EQ(centered(96, 97), -1);
}

}  // namespace
}  // namespace keyneg
