#include "keyneg/simnet.hpp"

#include <gtest/gtest.h>

#include <set>

namespace keyneg {
namespace {

ScenarioScript base(std::size_t users, std::size_t servers, std::size_t rounds, Mode mode = Mode::semi_honest) {
  ScenarioScript s;
  s.name = "test";
  s.seed = 42;
  s.mode = mode;
  s.vector_length = 8;
  s.threshold = 2;
  s.intermediate_servers = servers;
  s.rounds = rounds;
  for (UserId u = 1; u <= users; ++u) s.users.push_back(u);
  return s;
}

std::string scenario_path(const std::string& name) { return std::string(KEYNEG_SCENARIO_DIR) + "/" + name; }

// Plain field sum of the encoded inputs of I, computed independently of the protocol.
FieldVector expected_theta(const RoundOutcome& r, const FieldParams& f, std::size_t len) {
  std::vector<std::uint64_t> acc(len, 0);
  for (UserId u : r.roster_i) {
    const auto& x = r.inputs.at(u);
    for (std::size_t k = 0; k < len; ++k)
      acc[k] = static_cast<std::uint64_t>((static_cast<unsigned __int128>(acc[k]) + x[k]) % f.q());
  }
  return FieldVector(f, acc);
}

void expect_exact(const Transcript& t, const ScenarioScript& s) {
  const auto cfg = s.session_config();
  for (const auto& r : t.rounds) {
    if (r.status != RoundStatus::success) continue;
    ASSERT_TRUE(r.theta);
    EXPECT_EQ(*r.theta, expected_theta(r, cfg.field, cfg.vector_length)) << "round " << r.round;
  }
}

TEST(Session, HonestRoundsAreExact) {
  for (Mode mode : {Mode::semi_honest, Mode::malicious}) {
    const auto s = base(5, 3, 3, mode);
    const Transcript t = run(s);
    ASSERT_EQ(t.rounds.size(), 3u);
    EXPECT_TRUE(t.all_succeeded());
    for (const auto& r : t.rounds) {
      EXPECT_EQ(r.roster_i, (std::vector<UserId>{1, 2, 3, 4, 5}));
      EXPECT_EQ(r.verdicts.size(), 5u);
      for (const auto& [u, v] : r.verdicts) EXPECT_EQ(v, Verdict::accept) << u;
      EXPECT_TRUE(r.rejections.empty());
    }
    expect_exact(t, s);
  }
}

TEST(Session, PartialDropoutExcludesTheUser) {
  const auto s = load_scenario(scenario_path("partial_dropout.json"));
  const Transcript t = run(s);
  ASSERT_EQ(t.rounds.size(), 3u);
  EXPECT_TRUE(t.all_succeeded());
  // Shares reached f1 only, then all intermediates but not the aggregator.
  EXPECT_EQ(t.rounds[0].roster_i, (std::vector<UserId>{1, 2, 4, 5, 6}));
  EXPECT_EQ(t.rounds[1].roster_i, (std::vector<UserId>{1, 2, 3, 4, 6}));
  EXPECT_EQ(t.rounds[1].roster_a, (std::vector<UserId>{1, 2, 3, 4, 6}));
  // Dropping at theta broadcast leaves the sum intact; that user simply never verifies.
  EXPECT_EQ(t.rounds[2].roster_i.size(), 6u);
  EXPECT_FALSE(t.rounds[2].verdicts.count(6));
  expect_exact(t, s);
}

TEST(Session, DropoutsAtEveryLaterPhaseKeepTheSumExact) {
  for (Phase p : {Phase::roster, Phase::i_broadcast, Phase::partial_aggregation, Phase::final_aggregation,
                  Phase::theta_broadcast, Phase::verification}) {
    auto s = base(5, 2, 1);
    s.events[1].drops.push_back({3, p, {}});
    const Transcript t = run(s);
    ASSERT_EQ(t.rounds[0].status, RoundStatus::success) << to_string(p);
    // Shares were fully delivered before the drop, so u3 stays in I.
    EXPECT_EQ(t.rounds[0].roster_i.size(), 5u) << to_string(p);
    expect_exact(t, s);
  }
}

TEST(Session, SameSeedSameTranscriptAcrossExecutionModes) {
  const auto s = load_scenario(scenario_path("partial_dropout.json"));
  const std::string a = run(s).to_jsonl();
  EXPECT_EQ(a, run(s).to_jsonl());
  EXPECT_EQ(a, run(s, Execution::concurrent).to_jsonl());
  auto other = s;
  other.seed += 1;
  EXPECT_NE(a, run(other).to_jsonl());
}

TEST(Session, ConcurrentMaliciousMatchesSequential) {
  const auto s = base(12, 4, 2, Mode::malicious);
  EXPECT_EQ(run(s).to_jsonl(), run(s, Execution::concurrent).to_jsonl());
}

TEST(Session, JoinAndLeave) {
  const auto s = load_scenario(scenario_path("dynamic_join.json"));
  Session session(s);
  const Transcript& t = session.run_all();
  ASSERT_EQ(t.rounds.size(), 4u);
  EXPECT_TRUE(t.all_succeeded());
  EXPECT_EQ(t.rounds[0].roster_i, (std::vector<UserId>{1, 2, 3}));
  // u10 joins during masking of round 2 and contributes at once; u11 asked
  // during roster collection, so it starts in round 3.
  EXPECT_EQ(t.rounds[1].roster_i, (std::vector<UserId>{1, 2, 3, 10}));
  EXPECT_EQ(t.rounds[2].roster_i, (std::vector<UserId>{1, 2, 3, 10, 11}));
  EXPECT_EQ(t.rounds[3].roster_i, (std::vector<UserId>{2, 3, 10, 11}));
  EXPECT_EQ(session.user(10)->start_round(), 2u);
  EXPECT_EQ(session.user(11)->start_round(), 3u);
  EXPECT_FALSE(t.rounds[1].notes.empty());
  expect_exact(t, s);
}

TEST(Session, ThresholdBoundary) {
  for (std::size_t drops : {2u, 3u}) {
    auto s = base(5, 2, 1);
    s.threshold = 3;
    for (UserId u = 1; u <= drops; ++u) s.events[1].drops.push_back({u, Phase::masking, {}});
    const Transcript t = run(s);
    const auto& r = t.rounds[0];
    if (5 - drops >= 3) {
      EXPECT_EQ(r.status, RoundStatus::success);
      EXPECT_EQ(r.roster_i.size(), 3u);
      expect_exact(t, s);
    } else {
      EXPECT_EQ(r.status, RoundStatus::aborted);
      EXPECT_FALSE(r.theta);
      EXPECT_FALSE(r.failures.empty());
    }
  }
}

TEST(Session, AbortedRoundDoesNotPoisonTheNext) {
  auto s = base(4, 2, 2);
  s.threshold = 3;
  s.events[1].drops.push_back({1, Phase::masking, {}});
  s.events[1].drops.push_back({2, Phase::masking, {}});
  const Transcript t = run(s);
  EXPECT_EQ(t.rounds[0].status, RoundStatus::aborted);
  EXPECT_EQ(t.rounds[1].status, RoundStatus::success);
  expect_exact(t, s);
}

// Any coalition missing at least one node of a user's cycle sees shares
// that are consistent with every possible input: the partial sum of the
// shares it holds is offset by a key it never saw.
TEST(Session, CoalitionWithoutAggregatorLearnsNothingAboutOneUser) {
  auto s = base(4, 3, 1);
  s.vector_length = 1;
  s.modulus = 97;
  std::map<UserId, std::uint64_t> held;  // sum of a user's shares at f1..f3
  std::map<int, int> histogram;
  for (std::uint64_t seed = 1; seed <= 400; ++seed) {
    s.seed = seed;
    Session session(s);
    session.set_input_provider([&](std::uint64_t, UserId) { return FieldVector(FieldParams(97), {5}); });
    held.clear();
    session.set_wiretap([&](const TranscriptRecord& rec, const Message& m) {
      const auto* sh = std::get_if<MaskedShare>(&m);
      if (sh && rec.receiver.role == Role::intermediate && rec.sender == NodeId::user(1))
        held[1] = (held[1] + sh->payload[0]) % 97;
    });
    session.run_all();
    histogram[static_cast<int>(held[1])]++;
  }
  // With a constant input, the coalition's view still spreads across the field.
  EXPECT_GT(histogram.size(), 80u);
  for (const auto& [v, n] : histogram) EXPECT_LT(n, 20) << v;
}

TEST(Session, OneModelPerRoundForEveryHonestUser) {
  const auto s = base(6, 2, 2, Mode::malicious);
  std::map<std::uint64_t, std::set<std::string>> digests;
  Session session(s);
  session.set_wiretap([&](const TranscriptRecord& rec, const Message& m) {
    if (std::holds_alternative<GlobalModel>(m)) digests[rec.round].insert(rec.digest);
  });
  session.run_all();
  ASSERT_EQ(digests.size(), 2u);
  for (const auto& [round, set] : digests) EXPECT_EQ(set.size(), 1u) << round;
}

TEST(Session, SybilSharesRejectedEverywhere) {
  const auto s = load_scenario(scenario_path("sybil.json"));
  const Transcript t = run(s);
  EXPECT_TRUE(t.all_succeeded());
  for (const auto& r : t.rounds) {
    ASSERT_EQ(r.rejections.size(), 3u) << r.round;
    for (const auto& rej : r.rejections) EXPECT_EQ(rej.reason, Intake::bad_signature);
  }
  expect_exact(t, s);
}

TEST(Session, InconsistencyAttackDetectedByTarget) {
  const auto s = load_scenario(scenario_path("inconsistency_attack.json"));
  const Transcript t = run(s);
  const auto& r = t.rounds.at(1);
  EXPECT_EQ(r.status, RoundStatus::detected);
  EXPECT_EQ(r.verdicts.at(4), Verdict::detect_inconsistency);
  for (const auto& [u, v] : r.verdicts)
    if (u != 4) EXPECT_EQ(v, Verdict::accept) << u;
}

TEST(Session, RunningPastTheScriptThrows) {
  Session session(base(3, 1, 1));
  session.run_round();
  EXPECT_TRUE(session.finished());
  EXPECT_THROW(session.run_round(), std::logic_error);
}

TEST(Session, TranscriptJsonlHasOneLinePerRecordAndRound) {
  const Transcript t = run(base(3, 2, 2));
  const std::string j = t.to_jsonl();
  const auto lines = static_cast<std::size_t>(std::count(j.begin(), j.end(), '\n'));
  EXPECT_EQ(lines, t.records.size() + t.rounds.size());
  EXPECT_EQ(j.find("\"inputs\""), std::string::npos);
}

}  // namespace
}  // namespace keyneg
