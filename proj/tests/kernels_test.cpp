#include "keyneg/kernels.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "keyneg/field.hpp"

namespace keyneg::kernels {
namespace {

std::vector<u64> random_row(std::size_t n, u64 q, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<u64> v(n);
  for (auto& e : v) e = gen() % q;
  return v;
}

class ParallelMatchesSerial : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ParallelMatchesSerial, PairwiseKernels) {
  const std::size_t n = GetParam();
  for (u64 q : {u64{97}, kMersenne61, u64{18446744073709551557ull}}) {
    const auto a = random_row(n, q, 1), b = random_row(n, q, 2), c = random_row(n, q, 3);
    std::vector<u64> s(n), p(n);

    serial::add(a, b, s, q);
    parallel::add(a, b, p, q);
    ASSERT_EQ(s, p);
    serial::sub(a, b, s, q);
    parallel::sub(a, b, p, q);
    ASSERT_EQ(s, p);
    serial::scale(a, q - 2, s, q);
    parallel::scale(a, q - 2, p, q);
    ASSERT_EQ(s, p);
    serial::mask_share(a, b, c, s, q);
    parallel::mask_share(a, b, c, p, q);
    ASSERT_EQ(s, p);

    std::vector<u64> acc_s = a, acc_p = a;
    serial::accumulate(acc_s, b, q);
    parallel::accumulate(acc_p, b, q);
    ASSERT_EQ(acc_s, acc_p);
  }
}

TEST_P(ParallelMatchesSerial, SumRows) {
  const std::size_t n = GetParam();
  const u64 q = kMersenne61;
  std::vector<std::vector<u64>> data;
  for (std::uint64_t r = 0; r < 37; ++r) data.push_back(random_row(n, q, 100 + r));
  std::vector<std::span<const u64>> rows(data.begin(), data.end());
  std::vector<u64> s(n), p(n);
  serial::sum_rows(rows, s, q);
  parallel::sum_rows(rows, p, q);
  ASSERT_EQ(s, p);
}

INSTANTIATE_TEST_SUITE_P(Lengths, ParallelMatchesSerial,
                         ::testing::Values(0, 1, 7, kParallelThreshold - 1, kParallelThreshold, 70001));

TEST(Kernels, WideModulusAdditionDoesNotOverflow) {
  const u64 q = 18446744073709551557ull;
  EXPECT_EQ(add_mod(q - 1, q - 1, q), q - 2);
  EXPECT_EQ(sub_mod(0, q - 1, q), 1u);
}

TEST(Kernels, MaskShareFormula) {
  const u64 q = 97;
  const std::vector<u64> x{10}, cur{5}, prev{20};
  std::vector<u64> out(1);
  serial::mask_share(x, cur, prev, out, q);
  EXPECT_EQ(out[0], 92u);  // 10 + 5 - 20 = -5
}

TEST(Kernels, PowMod) {
  EXPECT_EQ(pow_mod(3, 95, 97), 65u);  // Fermat inverse of 3
  EXPECT_EQ(pow_mod(2, 61, kMersenne61), 1u);
  EXPECT_EQ(pow_mod(5, 0, 97), 1u);
}

}  // namespace
}  // namespace keyneg::kernels
