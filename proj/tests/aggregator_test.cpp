#include "keyneg/aggregator.hpp"

#include <gtest/gtest.h>

#include "keyneg/intermediate.hpp"
#include "keyneg/user.hpp"

namespace keyneg {
namespace {

SessionConfig config(std::size_t t = 2) {
  SessionConfig c;
  c.vector_length = 2;
  c.threshold = t;
  c.intermediate_count = 2;
  return c;
}

MaskedShare share(UserId u, std::uint64_t round, const SessionConfig& cfg, std::uint64_t value = 0) {
  return MaskedShare{NodeId::user(u), NodeId::aggregator(), round, FieldVector(cfg.field, {value, value}),
                     std::nullopt};
}

Roster f_roster(std::uint64_t j, std::uint64_t round, std::vector<UserId> users) {
  return Roster::make(RosterKind::participants, NodeId::intermediate(j), round, std::move(users));
}

struct Fixture {
  SessionConfig cfg;
  KeyRegistry reg;
  Aggregator agg;

  explicit Fixture(std::size_t t = 2) : cfg(config(t)), agg(cfg, Rng::from_seed(1)) {
    for (UserId u = 1; u <= 6; ++u) reg.add(NodeId::user(u));
    for (const auto& f : cfg.intermediates()) reg.add(f);
  }

  void shares(std::uint64_t round, std::vector<UserId> users) {
    for (auto u : users) ASSERT_EQ(agg.collect_share(share(u, round, cfg, u), reg), Intake::accepted);
  }
};

TEST(Intersection, IsAIntersectAllF) {
  Fixture fx;
  fx.agg.begin_round(1);
  fx.shares(1, {1, 2, 3, 4, 5});
  ASSERT_EQ(fx.agg.receive_roster(f_roster(1, 1, {1, 2, 3, 4, 6}), fx.reg), Intake::accepted);
  ASSERT_EQ(fx.agg.receive_roster(f_roster(2, 1, {2, 3, 4, 5, 6}), fx.reg), Intake::accepted);
  auto i = fx.agg.compute_intersection();
  ASSERT_TRUE(ok(i));
  EXPECT_EQ(std::get<Roster>(i).users, (std::vector<UserId>{2, 3, 4}));
  EXPECT_EQ(fx.agg.roster_a().users, (std::vector<UserId>{1, 2, 3, 4, 5}));
}

TEST(Intersection, MissingRosterAborts) {
  Fixture fx;
  fx.agg.begin_round(1);
  fx.shares(1, {1, 2});
  ASSERT_EQ(fx.agg.receive_roster(f_roster(1, 1, {1, 2}), fx.reg), Intake::accepted);
  EXPECT_EQ(std::get<Failure>(fx.agg.compute_intersection()).code, FailureCode::missing_roster);
}

TEST(Intersection, ThresholdIsInclusive) {
  for (std::size_t size : {2u, 3u}) {
    Fixture fx(3);
    fx.agg.begin_round(1);
    fx.shares(1, {1, 2, 3, 4});
    std::vector<UserId> f(size);
    for (std::size_t k = 0; k < size; ++k) f[k] = k + 1;
    ASSERT_EQ(fx.agg.receive_roster(f_roster(1, 1, f), fx.reg), Intake::accepted);
    ASSERT_EQ(fx.agg.receive_roster(f_roster(2, 1, {1, 2, 3, 4}), fx.reg), Intake::accepted);
    const auto i = fx.agg.compute_intersection();
    EXPECT_EQ(ok(i), size == 3) << "|I| = " << size;
    if (!ok(i)) EXPECT_EQ(std::get<Failure>(i).code, FailureCode::below_threshold);
  }
}

TEST(Intake, RostersAreCheckedAndDeduplicated) {
  Fixture fx;
  fx.agg.begin_round(2);
  EXPECT_EQ(fx.agg.receive_roster(f_roster(1, 1, {1}), fx.reg), Intake::stale);
  EXPECT_EQ(fx.agg.receive_roster(f_roster(3, 2, {1}), fx.reg), Intake::unknown_sender);
  EXPECT_EQ(fx.agg.receive_roster(Roster::make(RosterKind::aggregator, NodeId::aggregator(), 2, {1}), fx.reg),
            Intake::unknown_sender);
  EXPECT_EQ(fx.agg.receive_roster(f_roster(1, 2, {1}), fx.reg), Intake::accepted);
  EXPECT_EQ(fx.agg.receive_roster(f_roster(1, 2, {1, 2}), fx.reg), Intake::duplicate);
  EXPECT_EQ(fx.agg.collect_share(share(1, 2, fx.cfg), fx.reg), Intake::accepted);
  EXPECT_EQ(fx.agg.collect_share(share(1, 2, fx.cfg), fx.reg), Intake::duplicate);
  EXPECT_EQ(fx.agg.collect_share(share(9, 2, fx.cfg), fx.reg), Intake::unknown_sender);
}

TEST(FinalAggregate, OwnSharesOverIPlusPartials) {
  Fixture fx;
  fx.agg.begin_round(1);
  fx.shares(1, {1, 2, 3});
  ASSERT_EQ(fx.agg.receive_roster(f_roster(1, 1, {1, 2}), fx.reg), Intake::accepted);
  ASSERT_EQ(fx.agg.receive_roster(f_roster(2, 1, {1, 2, 3}), fx.reg), Intake::accepted);
  ASSERT_TRUE(ok(fx.agg.compute_intersection()));
  const auto missing = fx.agg.final_aggregate();
  EXPECT_EQ(std::get<Failure>(missing).code, FailureCode::missing_partial);
  for (std::uint64_t j = 1; j <= 2; ++j)
    ASSERT_EQ(fx.agg.receive_partial(
                  PartialAggregate{NodeId::intermediate(j), 1, FieldVector(fx.cfg.field, {10 * j, 0}), std::nullopt},
                  fx.reg),
              Intake::accepted);
  const auto model = std::get<GlobalModel>(fx.agg.final_aggregate());
  // u3 is outside I, so its own share is left out: 1 + 2 + 10 + 20.
  EXPECT_EQ(model.theta, FieldVector(fx.cfg.field, {33, 3}));
  EXPECT_EQ(model.roster_i.users, (std::vector<UserId>{1, 2}));
  EXPECT_FALSE(model.roster_i.signature);
}

GlobalModel honest_model(Fixture& fx, std::uint64_t round) {
  fx.agg.begin_round(round);
  fx.shares(round, {1, 2});
  for (std::uint64_t j = 1; j <= 2; ++j) {
    EXPECT_EQ(fx.agg.receive_roster(f_roster(j, round, {1, 2}), fx.reg), Intake::accepted);
  }
  EXPECT_TRUE(ok(fx.agg.compute_intersection()));
  for (std::uint64_t j = 1; j <= 2; ++j)
    fx.agg.receive_partial(PartialAggregate{NodeId::intermediate(j), round, FieldVector::zeros(fx.cfg.field, 2),
                                            std::nullopt},
                           fx.reg);
  return std::get<GlobalModel>(fx.agg.final_aggregate());
}

TEST(Verification, RMinusHashIsTheRoundSecret) {
  Fixture fx;
  const GlobalModel model = honest_model(fx, 1);
  const VerificationTuple v = fx.agg.build_verification();
  const Bytes input = model_digest_input(1, model.theta);
  const std::uint64_t s = fx.cfg.field.sub(v.r, hash_to_field(input, fx.cfg.field));
  EXPECT_EQ(s, *fx.agg.round_secret());
  EXPECT_EQ(v.s, mac_with_element(s, input));
  EXPECT_EQ(v.roster_a.users, fx.agg.roster_a().users);
}

TEST(Verification, SecretIsFreshEveryRound) {
  Fixture fx;
  std::vector<std::uint64_t> secrets;
  for (std::uint64_t r = 1; r <= 5; ++r) {
    honest_model(fx, r);
    fx.agg.build_verification();
    secrets.push_back(*fx.agg.round_secret());
  }
  std::sort(secrets.begin(), secrets.end());
  EXPECT_EQ(std::unique(secrets.begin(), secrets.end()), secrets.end());
  fx.agg.begin_round(6);
  EXPECT_FALSE(fx.agg.round_secret());
}

TEST(Malice, DivergentThetaOnlyForTarget) {
  Fixture fx;
  const GlobalModel model = honest_model(fx, 1);
  fx.agg.inject_malice({{Malice::send_divergent_theta, 2}});
  EXPECT_FALSE(fx.agg.honest());
  EXPECT_EQ(fx.agg.model_for_user(1), model);
  EXPECT_NE(fx.agg.model_for_user(2).theta, model.theta);
  fx.agg.begin_round(2);
  EXPECT_TRUE(fx.agg.honest());
}

TEST(Malice, ForgeRosterOnlyReachesFirstServer) {
  Fixture fx;
  fx.agg.begin_round(1);
  fx.agg.inject_malice({{Malice::forge_roster, 2}});
  fx.shares(1, {1, 2, 3});
  for (std::uint64_t j = 1; j <= 2; ++j) fx.agg.receive_roster(f_roster(j, 1, {1, 2, 3}), fx.reg);
  const auto i = std::get<Roster>(fx.agg.compute_intersection());
  EXPECT_EQ(i.users, (std::vector<UserId>{1, 2, 3}));
  EXPECT_EQ(fx.agg.roster_for_server(NodeId::intermediate(1)).users, (std::vector<UserId>{1, 3}));
  EXPECT_EQ(fx.agg.roster_for_server(NodeId::intermediate(2)).users, i.users);
}

TEST(Malice, DropHonestUserShrinksI) {
  Fixture fx;
  fx.agg.begin_round(1);
  fx.agg.inject_malice({{Malice::drop_honest_user, 3}});
  fx.shares(1, {1, 2, 3});
  for (std::uint64_t j = 1; j <= 2; ++j) fx.agg.receive_roster(f_roster(j, 1, {1, 2, 3}), fx.reg);
  EXPECT_EQ(std::get<Roster>(fx.agg.compute_intersection()).users, (std::vector<UserId>{1, 2}));
}

TEST(Malice, NamesRoundTrip) {
  for (Malice m : {Malice::send_divergent_theta, Malice::forge_roster, Malice::drop_honest_user})
    EXPECT_EQ(parse_malice(to_string(m)), m);
  EXPECT_FALSE(parse_malice("bogus"));
}

}  // namespace
}  // namespace keyneg
