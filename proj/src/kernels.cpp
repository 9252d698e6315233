#include "keyneg/kernels.hpp"

#include <algorithm>

namespace keyneg::kernels {

u64 pow_mod(u64 base, u64 exp, u64 q) {
  u64 result = 1 % q;
  base %= q;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, q);
    base = mul_mod(base, base, q);
    exp >>= 1;
  }
  return result;
}

namespace serial {

void add(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = add_mod(a[i], b[i], q);
}

void sub(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sub_mod(a[i], b[i], q);
}

void scale(std::span<const u64> v, u64 c, std::span<u64> out, u64 q) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mul_mod(v[i], c, q);
}

void accumulate(std::span<u64> acc, std::span<const u64> x, u64 q) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = add_mod(acc[i], x[i], q);
}

void sum_rows(std::span<const std::span<const u64>> rows, std::span<u64> out, u64 q) {
  std::fill(out.begin(), out.end(), u64{0});
  for (const auto& row : rows) accumulate(out, row, q);
}

void mask_share(std::span<const u64> scaled_x, std::span<const u64> k_cur,
                std::span<const u64> k_prev, std::span<u64> out, u64 q) {
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = sub_mod(add_mod(scaled_x[i], k_cur[i], q), k_prev[i], q);
}

}  // namespace serial

namespace parallel {

namespace {
using Index = std::int64_t;
constexpr Index kBlock = 4096;
bool wide(std::size_t n) { return n >= kParallelThreshold; }
}  // namespace

void add(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q) {
  const Index n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static) if (wide(out.size()))
  for (Index i = 0; i < n; ++i) out[i] = add_mod(a[i], b[i], q);
}

void sub(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q) {
  const Index n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static) if (wide(out.size()))
  for (Index i = 0; i < n; ++i) out[i] = sub_mod(a[i], b[i], q);
}

void scale(std::span<const u64> v, u64 c, std::span<u64> out, u64 q) {
  const Index n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static) if (wide(out.size()))
  for (Index i = 0; i < n; ++i) out[i] = mul_mod(v[i], c, q);
}

void accumulate(std::span<u64> acc, std::span<const u64> x, u64 q) {
  const Index n = static_cast<Index>(acc.size());
#pragma omp parallel for schedule(static) if (wide(acc.size()))
  for (Index i = 0; i < n; ++i) acc[i] = add_mod(acc[i], x[i], q);
}

void sum_rows(std::span<const std::span<const u64>> rows, std::span<u64> out, u64 q) {
  const Index n = static_cast<Index>(out.size());
  const Index blocks = (n + kBlock - 1) / kBlock;
  // Blocked so each thread keeps its output slice hot while sweeping rows.
#pragma omp parallel for schedule(static) if (wide(out.size() * rows.size()))
  for (Index blk = 0; blk < blocks; ++blk) {
    const Index lo = blk * kBlock;
    const Index hi = std::min(n, lo + kBlock);
    for (Index i = lo; i < hi; ++i) out[i] = 0;
    for (const auto& row : rows)
      for (Index i = lo; i < hi; ++i) out[i] = add_mod(out[i], row[i], q);
  }
}

void mask_share(std::span<const u64> scaled_x, std::span<const u64> k_cur,
                std::span<const u64> k_prev, std::span<u64> out, u64 q) {
  const Index n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static) if (wide(out.size()))
  for (Index i = 0; i < n; ++i)
    out[i] = sub_mod(add_mod(scaled_x[i], k_cur[i], q), k_prev[i], q);
}

}  // namespace parallel

}  // namespace keyneg::kernels
