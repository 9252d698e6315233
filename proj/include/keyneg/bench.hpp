#pragma once

// In-process timing of the protocol kernels per role and phase. No bus, no
// training: inputs are random field vectors.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keyneg/protocol.hpp"

namespace keyneg {

enum class Masker { keyneg, prf_baseline };

std::string to_string(Masker m);
std::optional<Masker> parse_masker(std::string_view s);

struct BenchParams {
  Masker masker = Masker::keyneg;
  Mode mode = Mode::semi_honest;
  std::size_t users = 100;
  std::size_t vec_len = 16384;
  std::size_t servers = 5;
  std::size_t reps = 5;
  std::uint64_t seed = 1;
  /// Only time user masking; the other phases need every share gathered.
  bool masking_only = false;
  /// Time at most this many users per masking repetition (0: all of them).
  std::size_t masking_sample = 0;
};

struct BenchRow {
  Masker masker = Masker::keyneg;
  Mode mode = Mode::semi_honest;
  std::size_t users = 0;
  std::size_t vec_len = 0;
  std::size_t servers = 0;
  std::string role;
  std::string phase;
  double micros_median = 0.0;
};

/// Rows for user/masking, intermediate/partial_aggregation,
/// aggregator/final_aggregation and, for keyneg, aggregator/verification and
/// user/verification. User rows are per user.
std::vector<BenchRow> bench_point(const BenchParams& p);

std::string bench_csv_header();
std::string to_csv(const BenchRow& row);

double median(std::vector<double> v);

/// Coefficient of determination of the least-squares line through (x, y).
double linear_r2(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace keyneg
