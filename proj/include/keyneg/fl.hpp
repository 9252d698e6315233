#pragma once

// Federated averaging over the secure aggregation session, next to the same
// training run with plaintext averaging.
//
// The task is multinomial logistic regression on Gaussian blobs. Users send
// clipped weight deltas; the model has classes * (features + 1) weights.

#include <cstdint>
#include <string>
#include <vector>

#include "keyneg/protocol.hpp"
#include "keyneg/simnet.hpp"

namespace keyneg {

struct FlConfig {
  std::size_t users = 8;
  std::size_t classes = 4;
  std::size_t features = 15;
  std::size_t samples_per_user = 64;
  std::size_t test_samples = 512;
  std::size_t rounds = 50;
  double learning_rate = 0.1;
  std::size_t local_epochs = 1;
  /// Blob standard deviation relative to unit-spaced centres.
  double noise = 1.0;
  std::size_t intermediate_servers = 2;
  std::size_t threshold = 2;
  Mode mode = Mode::semi_honest;
  std::uint64_t seed = 7;

  std::size_t model_length() const { return classes * (features + 1); }
  void validate() const;
};

struct Dataset {
  std::size_t features = 0;
  /// Row-major, one row of `features` values per sample.
  std::vector<double> x;
  std::vector<std::size_t> y;

  std::size_t size() const { return y.size(); }
};

struct BlobTask {
  std::vector<Dataset> users;
  Dataset test;
};

BlobTask make_blob_task(const FlConfig& cfg);

/// Weights laid out per class: features, then the bias.
class SoftmaxModel {
 public:
  SoftmaxModel(std::size_t classes, std::size_t features);

  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }

  std::size_t predict(const double* sample) const;
  double accuracy(const Dataset& d) const;
  /// SGD over `d` in a seeded order; returns new weights minus old.
  std::vector<double> local_delta(const Dataset& d, double lr, std::size_t epochs, std::uint64_t seed) const;

 private:
  std::size_t classes_;
  std::size_t features_;
  std::vector<double> w_;
};

struct FlRound {
  std::uint64_t round = 0;
  double secure_accuracy = 0.0;
  double plain_accuracy = 0.0;
  /// max |decode(theta) - plaintext sum of the same deltas|.
  double aggregate_gap = 0.0;
  /// theta equals the field sum of the encoded deltas.
  bool exact = false;
  std::size_t contributors = 0;
};

struct FlResult {
  std::vector<FlRound> rounds;
  /// m / scale: the quantisation bound on aggregate_gap.
  double gap_bound = 0.0;

  double max_gap() const;
  bool all_exact() const;
  double final_secure_accuracy() const;
  double final_plain_accuracy() const;
  /// Columns: round,secure_acc,plain_acc,gap
  std::string to_csv() const;
};

/// Runs both training loops on identical data and seeds.
FlResult train_paired(const FlConfig& cfg, Execution execution = Execution::sequential);

}  // namespace keyneg
