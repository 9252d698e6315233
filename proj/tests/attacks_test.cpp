#include "keyneg/attacks.hpp"

#include <gtest/gtest.h>

namespace keyneg {
namespace {

class Detection : public ::testing::TestWithParam<AttackKind> {};

TEST_P(Detection, TwentySeededRuns) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const AttackTrial t = run_attack(GetParam(), seed);
    EXPECT_TRUE(t.detected) << to_string(GetParam()) << " seed " << seed;
    EXPECT_FALSE(t.observed.empty());
    for (const auto& [u, what] : t.observed) EXPECT_EQ(what, t.expected) << "u" << u;
  }
}

INSTANTIATE_TEST_SUITE_P(All, Detection,
                         ::testing::Values(AttackKind::sybil, AttackKind::forge_roster, AttackKind::drop_honest_user,
                                           AttackKind::divergent_theta),
                         [](const auto& info) {
                           std::string n = to_string(info.param);
                           for (auto& c : n)
                             if (c == '-') c = '_';
                           return n;
                         });

TEST(AttackScenario, ShapeFollowsSeed) {
  const auto a = attack_scenario(AttackKind::sybil, 5), b = attack_scenario(AttackKind::sybil, 5);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(a.mode, Mode::malicious);
  EXPECT_NO_THROW(a.validate());
  EXPECT_NE(to_json(a), to_json(attack_scenario(AttackKind::sybil, 6)));
}

TEST(AttackKindNames, RoundTrip) {
  for (AttackKind k : {AttackKind::sybil, AttackKind::forge_roster, AttackKind::drop_honest_user,
                       AttackKind::divergent_theta})
    EXPECT_EQ(parse_attack_kind(to_string(k)), k);
  EXPECT_FALSE(parse_attack_kind("nope"));
}

ScenarioScript fsbs_script() {
  ScenarioScript s;
  s.name = "fsbs";
  s.seed = 3;
  s.vector_length = 32;
  s.threshold = 2;
  s.intermediate_servers = 3;
  s.rounds = 5;
  s.users = {1, 2, 3, 4};
  return s;
}

TEST(Fsbs, BaselineWithAllSeedsRecoversEveryRound) {
  const auto r = attack_fsbs_baseline(fsbs_script(), 2, 3, 3);
  EXPECT_EQ(r.rounds_recovered(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.reconstructed[i], r.actual[i]);
}

TEST(Fsbs, BaselineWithPartialSeedsRecoversNothing) {
  for (std::size_t leaked : {0u, 1u, 2u}) {
    const auto r = attack_fsbs_baseline(fsbs_script(), 2, 3, leaked);
    EXPECT_EQ(r.rounds_recovered(), 0u) << leaked;
    EXPECT_TRUE(r.residual_uniform()) << leaked;
  }
}

TEST(Fsbs, KeyNegationLeakStaysInItsRound) {
  const auto r = attack_fsbs_ours(fsbs_script(), 2, 3);
  EXPECT_TRUE(r.recovered.at(2));
  EXPECT_EQ(r.other_rounds_recovered(), 0u);
  EXPECT_TRUE(r.residual_uniform());
  EXPECT_EQ(r.residual_plausible, 0u);
}

TEST(Fsbs, ResidualCheckFlagsStructuredData) {
  FsbsReport r;
  r.leak_round = 1;
  r.residual_count = 1000;
  r.residual_mean = 0.5;
  r.residual_plausible = 0;
  r.residual_chi2 = 10.0;
  EXPECT_TRUE(r.residual_uniform());
  r.residual_plausible = 1;
  EXPECT_FALSE(r.residual_uniform());
  r.residual_plausible = 0;
  r.residual_mean = 0.2;
  EXPECT_FALSE(r.residual_uniform());
  r.residual_mean = 0.5;
  r.residual_chi2 = 100.0;
  EXPECT_FALSE(r.residual_uniform());
}

}  // namespace
}  // namespace keyneg
