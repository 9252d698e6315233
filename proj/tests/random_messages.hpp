#pragma once

// Seeded generators of well-formed messages for round-trip properties.

#include <vector>

#include "keyneg/crypto.hpp"
#include "keyneg/messages.hpp"

namespace keyneg::testing {

class MessageFactory {
 public:
  explicit MessageFactory(std::uint64_t seed, FieldParams field = {}) : rng_(Rng::from_seed(seed, 77)), field_(field) {}

  const FieldParams& field() const { return field_; }

  FieldVector vector() { return fresh_mask(rng_, rng_.below(40), field_); }

  std::optional<Signature> signature() {
    if (rng_.below(2) == 0) return std::nullopt;
    Bytes b(rng_.below(2) == 0 ? 64 : rng_.below(300));
    rng_.fill(b);
    return Signature{std::move(b)};
  }

  NodeId server() {
    const std::uint64_t n = rng_.below(6);
    return n == 0 ? NodeId::aggregator() : NodeId::intermediate(n);
  }

  Roster roster(RosterKind kind, std::uint64_t round) {
    std::vector<UserId> users;
    for (std::uint64_t i = 0, n = rng_.below(20); i < n; ++i) users.push_back(rng_.below(1000));
    const NodeId owner = kind == RosterKind::participants ? NodeId::intermediate(1 + rng_.below(8)) : NodeId::aggregator();
    Roster r = Roster::make(kind, owner, round, users);
    r.signature = signature();
    return r;
  }

  MaskedShare share() {
    return MaskedShare{NodeId::user(rng_.next_u64()), server(), rng_.next_u64(), vector(), signature()};
  }

  PartialAggregate partial() {
    return PartialAggregate{NodeId::intermediate(1 + rng_.below(100)), rng_.next_u64(), vector(), signature()};
  }

  GlobalModel global() {
    const std::uint64_t round = rng_.next_u64();
    return GlobalModel{round, vector(), roster(RosterKind::intersection, round)};
  }

  VerificationTuple verification() {
    VerificationTuple v;
    v.round = rng_.next_u64();
    v.r = rng_.below(field_.q());
    rng_.fill(v.s);
    v.roster_a = roster(RosterKind::aggregator, v.round);
    v.roster_i = roster(RosterKind::intersection, v.round);
    v.signature = signature();
    if (rng_.below(2) == 1) {
      Roster f = roster(RosterKind::participants, v.round);
      v.relay = Relay{f.owner, std::move(f)};
    }
    return v;
  }

  Message any(MessageType t) {
    switch (t) {
      case MessageType::masked_share: return share();
      case MessageType::roster: return roster(static_cast<RosterKind>(rng_.below(3)), rng_.next_u64());
      case MessageType::partial_aggregate: return partial();
      case MessageType::global_model: return global();
      default: return verification();
    }
  }

 private:
  Rng rng_;
  FieldParams field_;
};

inline const std::vector<MessageType>& all_message_types() {
  static const std::vector<MessageType> types{MessageType::masked_share, MessageType::roster,
                                              MessageType::partial_aggregate, MessageType::global_model,
                                              MessageType::verification};
  return types;
}

}  // namespace keyneg::testing
