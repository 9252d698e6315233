#include "keyneg/fl.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace keyneg {
namespace {

FlConfig small() {
  FlConfig c;
  c.users = 4;
  c.rounds = 6;
  c.test_samples = 256;
  return c;
}

TEST(Blobs, DeterministicAndShaped) {
  const auto cfg = small();
  const auto a = make_blob_task(cfg), b = make_blob_task(cfg);
  ASSERT_EQ(a.users.size(), cfg.users);
  EXPECT_EQ(a.users[0].x, b.users[0].x);
  EXPECT_EQ(a.users[0].size(), cfg.samples_per_user);
  EXPECT_EQ(a.users[0].x.size(), cfg.samples_per_user * cfg.features);
  EXPECT_EQ(a.test.size(), cfg.test_samples);
  for (auto y : a.test.y) EXPECT_LT(y, cfg.classes);
}

TEST(Softmax, ZeroModelIsNearChance) {
  const auto cfg = small();
  const auto task = make_blob_task(cfg);
  SoftmaxModel m(cfg.classes, cfg.features);
  EXPECT_EQ(m.weights().size(), cfg.model_length());
  EXPECT_LT(m.accuracy(task.test), 0.5);
}

TEST(Softmax, LocalTrainingImproves) {
  const auto cfg = small();
  const auto task = make_blob_task(cfg);
  SoftmaxModel m(cfg.classes, cfg.features);
  const double before = m.accuracy(task.test);
  for (int e = 0; e < 5; ++e) {
    const auto d = m.local_delta(task.users[0], cfg.learning_rate, 1, e);
    for (std::size_t k = 0; k < d.size(); ++k) m.weights()[k] += d[k];
  }
  EXPECT_GT(m.accuracy(task.test), before + 0.2);
}

TEST(Training, SecureTracksPlaintext) {
  const auto cfg = small();
  const FlResult r = train_paired(cfg);
  ASSERT_EQ(r.rounds.size(), cfg.rounds);
  EXPECT_TRUE(r.all_exact());
  EXPECT_LE(r.max_gap(), r.gap_bound);
  EXPECT_DOUBLE_EQ(r.gap_bound, static_cast<double>(cfg.users) / std::ldexp(1.0, 16));
  EXPECT_NEAR(r.final_secure_accuracy(), r.final_plain_accuracy(), 0.02);
  EXPECT_GT(r.final_secure_accuracy(), 0.6);
  for (const auto& round : r.rounds) EXPECT_EQ(round.contributors, cfg.users);
}

TEST(Training, CsvHasHeaderAndOneRowPerRound) {
  auto cfg = small();
  cfg.rounds = 3;
  const auto csv = train_paired(cfg).to_csv();
  EXPECT_EQ(csv.rfind("round,secure_acc,plain_acc,gap\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Config, RejectsNonsense) {
  auto cfg = small();
  cfg.users = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small();
  cfg.classes = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace keyneg
