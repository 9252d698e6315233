#include "keyneg/intermediate.hpp"

#include <algorithm>

#include "keyneg/kernels.hpp"

namespace keyneg {

IntermediateServer::IntermediateServer(std::uint64_t index, SessionConfig config, std::optional<KeyPair> keys)
    : id_(NodeId::intermediate(index)), config_(std::move(config)), keypair_(std::move(keys)) {
  config_.validate();
  if (config_.signing() && !keypair_) throw std::invalid_argument("malicious mode requires a signing key");
  roster_f_ = Roster::make(RosterKind::participants, id_, 0, {});
}

void IntermediateServer::begin_round(std::uint64_t round) {
  round_ = round;
  inbox_.clear();
  roster_f_ = Roster::make(RosterKind::participants, id_, round, {});
  received_i_.reset();
  aborted_ = false;
}

Intake IntermediateServer::collect_share(const MaskedShare& share, const KeyRegistry& registry) {
  if (share.target != id_) return Intake::wrong_target;
  if (share.round != round_) return Intake::stale;
  if (!share.sender.is_user() || !registry.contains(share.sender)) return Intake::unknown_sender;
  if (config_.signing() && !verify_message(share, share.sender, registry, *config_.scheme))
    return Intake::bad_signature;
  if (share.payload.size() != config_.vector_length || !(share.payload.params() == config_.field))
    return Intake::bad_length;
  if (inbox_.count(share.sender.id)) return Intake::duplicate;
  inbox_.emplace(share.sender.id, share.payload);
  auto& users = roster_f_.users;
  users.insert(std::upper_bound(users.begin(), users.end(), share.sender.id), share.sender.id);
  return Intake::accepted;
}

Outcome<Roster> IntermediateServer::emit_roster() {
  if (roster_f_.size() < config_.threshold) {
    aborted_ = true;
    return Failure{FailureCode::below_threshold, to_string(id_) + " collected " +
                                                     std::to_string(roster_f_.size()) + " shares"};
  }
  Roster out = roster_f_;
  if (config_.signing()) sign_message(out, *keypair_, *config_.scheme);
  return out;
}

Outcome<PartialAggregate> IntermediateServer::partial_aggregate(const Roster& roster_i, const KeyRegistry& registry) {
  if (aborted_) return Failure{FailureCode::below_threshold, to_string(id_) + " aborted this round"};
  if (roster_i.round != round_) return Failure{FailureCode::stale, "I is from another round"};
  if (roster_i.kind != RosterKind::intersection || !roster_i.canonical())
    return Failure{FailureCode::protocol_violation, "I is not a canonical intersection roster"};
  if (config_.signing() && !verify_message(roster_i, NodeId::aggregator(), registry, *config_.scheme))
    return Failure{FailureCode::bad_signature, "aggregator signature on I does not verify"};
  if (roster_i.size() < config_.threshold)
    return Failure{FailureCode::below_threshold, "|I| below threshold"};
  received_i_ = roster_i;

  std::vector<std::span<const std::uint64_t>> rows;
  rows.reserve(roster_i.size());
  for (UserId u : roster_i.users) {
    auto it = inbox_.find(u);
    if (it == inbox_.end())
      return Failure{FailureCode::protocol_violation,
                     "I names u" + std::to_string(u) + " but " + to_string(id_) + " holds no share from it"};
    rows.push_back(it->second.elems());
  }
  FieldVector total = FieldVector::zeros(config_.field, config_.vector_length);
  kernels::parallel::sum_rows(rows, total.mutable_elems(), config_.field.q());

  PartialAggregate out{id_, round_, std::move(total), std::nullopt};
  if (config_.signing()) sign_message(out, *keypair_, *config_.scheme);
  return out;
}

Outcome<VerificationTuple> IntermediateServer::relay_verification(const VerificationTuple& tuple,
                                                                  const KeyRegistry& registry) {
  if (tuple.round != round_) return Failure{FailureCode::stale, "verification tuple from another round"};
  if (config_.signing() && !verify_message(tuple, NodeId::aggregator(), registry, *config_.scheme))
    return Failure{FailureCode::bad_signature, "aggregator signature on (T, I, A) does not verify"};
  VerificationTuple out = tuple;
  Roster f = roster_f_;
  if (config_.signing()) sign_message(f, *keypair_, *config_.scheme);
  out.relay = Relay{id_, std::move(f)};
  return out;
}

}  // namespace keyneg
