#pragma once

// Element-wise Z_q kernels on raw residue spans.
//
// Every kernel exists twice: `serial` is the straightforward reference kept
// for tests, `parallel` splits the element range across OpenMP threads. Both
// produce bit-identical output; field addition is exact, so the order in which
// rows are accumulated never matters.

#include <cstddef>
#include <cstdint>
#include <span>

namespace keyneg::kernels {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

/// Inputs must already be reduced into [0, q). Safe for any q < 2^64.
inline u64 add_mod(u64 a, u64 b, u64 q) {
  u64 s = a + b;
  if (s < a || s >= q) s -= q;
  return s;
}

inline u64 sub_mod(u64 a, u64 b, u64 q) { return a >= b ? a - b : a + (q - b); }

inline u64 mul_mod(u64 a, u64 b, u64 q) {
  return static_cast<u64>((static_cast<u128>(a) * b) % q);
}

u64 pow_mod(u64 base, u64 exp, u64 q);

// Below this length the parallel variants run the serial loop.
inline constexpr std::size_t kParallelThreshold = 1 << 14;

namespace serial {
void add(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q);
void sub(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q);
void scale(std::span<const u64> v, u64 c, std::span<u64> out, u64 q);
void accumulate(std::span<u64> acc, std::span<const u64> x, u64 q);
void sum_rows(std::span<const std::span<const u64>> rows, std::span<u64> out, u64 q);
/// out = scaled_x + k_cur - k_prev
void mask_share(std::span<const u64> scaled_x, std::span<const u64> k_cur,
                std::span<const u64> k_prev, std::span<u64> out, u64 q);
}  // namespace serial

namespace parallel {
void add(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q);
void sub(std::span<const u64> a, std::span<const u64> b, std::span<u64> out, u64 q);
void scale(std::span<const u64> v, u64 c, std::span<u64> out, u64 q);
void accumulate(std::span<u64> acc, std::span<const u64> x, u64 q);
void sum_rows(std::span<const std::span<const u64>> rows, std::span<u64> out, u64 q);
void mask_share(std::span<const u64> scaled_x, std::span<const u64> k_cur,
                std::span<const u64> k_prev, std::span<u64> out, u64 q);
}  // namespace parallel

}  // namespace keyneg::kernels
