#include "keyneg/aggregator.hpp"

#include <algorithm>

#include "keyneg/kernels.hpp"

namespace keyneg {

std::string to_string(Malice m) {
  switch (m) {
    case Malice::send_divergent_theta: return "send-divergent-theta";
    case Malice::forge_roster: return "forge-roster";
    case Malice::drop_honest_user: return "drop-honest-user";
  }
  return "unknown";
}

std::optional<Malice> parse_malice(std::string_view s) {
  if (s == "send-divergent-theta") return Malice::send_divergent_theta;
  if (s == "forge-roster") return Malice::forge_roster;
  if (s == "drop-honest-user") return Malice::drop_honest_user;
  return std::nullopt;
}

Aggregator::Aggregator(SessionConfig config, Rng rng, std::optional<KeyPair> keys)
    : config_(std::move(config)), rng_(std::move(rng)), keypair_(std::move(keys)) {
  config_.validate();
  if (config_.signing() && !keypair_) throw std::invalid_argument("malicious mode requires a signing key");
  roster_a_ = Roster::make(RosterKind::aggregator, id(), 0, {});
}

void Aggregator::begin_round(std::uint64_t round) {
  round_ = round;
  malice_.clear();
  inbox_.clear();
  roster_a_ = Roster::make(RosterKind::aggregator, id(), round, {});
  rosters_f_.clear();
  roster_i_.reset();
  forged_i_.reset();
  partials_.clear();
  model_.reset();
  secret_.reset();
  tuple_.reset();
}

const MaliceAction* Aggregator::find_malice(Malice kind) const {
  auto it = std::find_if(malice_.begin(), malice_.end(), [&](const MaliceAction& a) { return a.kind == kind; });
  return it == malice_.end() ? nullptr : &*it;
}

Intake Aggregator::collect_share(const MaskedShare& share, const KeyRegistry& registry) {
  if (share.target != id()) return Intake::wrong_target;
  if (share.round != round_) return Intake::stale;
  if (!share.sender.is_user() || !registry.contains(share.sender)) return Intake::unknown_sender;
  if (config_.signing() && !verify_message(share, share.sender, registry, *config_.scheme))
    return Intake::bad_signature;
  if (share.payload.size() != config_.vector_length || !(share.payload.params() == config_.field))
    return Intake::bad_length;
  if (inbox_.count(share.sender.id)) return Intake::duplicate;
  inbox_.emplace(share.sender.id, share.payload);
  auto& users = roster_a_.users;
  users.insert(std::upper_bound(users.begin(), users.end(), share.sender.id), share.sender.id);
  return Intake::accepted;
}

Intake Aggregator::receive_roster(const Roster& roster, const KeyRegistry& registry) {
  if (roster.round != round_) return Intake::stale;
  if (roster.kind != RosterKind::participants || roster.owner.role != Role::intermediate ||
      roster.owner.id == 0 || roster.owner.id > config_.intermediate_count)
    return Intake::unknown_sender;
  if (config_.signing() && !verify_message(roster, roster.owner, registry, *config_.scheme))
    return Intake::bad_signature;
  if (rosters_f_.count(roster.owner)) return Intake::duplicate;
  rosters_f_.emplace(roster.owner, roster);
  return Intake::accepted;
}

Outcome<Roster> Aggregator::compute_intersection() {
  if (roster_a_.size() < config_.threshold)
    return Failure{FailureCode::below_threshold, "|A| = " + std::to_string(roster_a_.size())};
  std::vector<UserId> users = roster_a_.users;
  for (const NodeId& f : config_.intermediates()) {
    auto it = rosters_f_.find(f);
    if (it == rosters_f_.end()) return Failure{FailureCode::missing_roster, "no F_j from " + to_string(f)};
    users = intersect(users, it->second.users);
  }
  if (users.size() < config_.threshold)
    return Failure{FailureCode::below_threshold, "|I| = " + std::to_string(users.size())};

  if (const auto* m = find_malice(Malice::drop_honest_user))
    users.erase(std::remove(users.begin(), users.end(), m->target), users.end());

  Roster i = Roster::make(RosterKind::intersection, id(), round_, users);
  if (config_.signing()) sign_message(i, *keypair_, *config_.scheme);
  roster_i_ = i;

  if (const auto* m = find_malice(Malice::forge_roster)) {
    std::vector<UserId> forged = users;
    forged.erase(std::remove(forged.begin(), forged.end(), m->target), forged.end());
    Roster f = Roster::make(RosterKind::intersection, id(), round_, forged);
    if (config_.signing()) sign_message(f, *keypair_, *config_.scheme);
    forged_i_ = f;
  }
  return i;
}

Roster Aggregator::roster_for_server(NodeId server) const {
  if (!roster_i_) throw std::logic_error("I has not been computed");
  if (forged_i_ && server == NodeId::intermediate(1)) return *forged_i_;
  return *roster_i_;
}

Intake Aggregator::receive_partial(const PartialAggregate& partial, const KeyRegistry& registry) {
  if (partial.round != round_) return Intake::stale;
  if (partial.sender.role != Role::intermediate || partial.sender.id == 0 ||
      partial.sender.id > config_.intermediate_count)
    return Intake::unknown_sender;
  if (config_.signing() && !verify_message(partial, partial.sender, registry, *config_.scheme))
    return Intake::bad_signature;
  if (partial.payload.size() != config_.vector_length || !(partial.payload.params() == config_.field))
    return Intake::bad_length;
  if (partials_.count(partial.sender)) return Intake::duplicate;
  partials_.emplace(partial.sender, partial.payload);
  return Intake::accepted;
}

Outcome<GlobalModel> Aggregator::final_aggregate() {
  if (!roster_i_) return Failure{FailureCode::protocol_violation, "final aggregation before I"};
  std::vector<std::span<const std::uint64_t>> rows;
  for (UserId u : roster_i_->users) {
    auto it = inbox_.find(u);
    if (it == inbox_.end()) return Failure{FailureCode::protocol_violation, "I names a user absent from A"};
    rows.push_back(it->second.elems());
  }
  for (const NodeId& f : config_.intermediates()) {
    auto it = partials_.find(f);
    if (it == partials_.end()) return Failure{FailureCode::missing_partial, "no partial aggregate from " + to_string(f)};
    rows.push_back(it->second.elems());
  }
  FieldVector theta = FieldVector::zeros(config_.field, config_.vector_length);
  kernels::parallel::sum_rows(rows, theta.mutable_elems(), config_.field.q());
  Roster i = *roster_i_;
  i.signature.reset();
  model_ = GlobalModel{round_, std::move(theta), std::move(i)};
  return *model_;
}

GlobalModel Aggregator::model_for_user(UserId user) const {
  if (!model_) throw std::logic_error("no global model this round");
  GlobalModel out = *model_;
  const auto* m = find_malice(Malice::send_divergent_theta);
  if (m && m->target == user && out.theta.size() > 0) {
    auto e = out.theta.mutable_elems();
    e[0] = config_.field.add(e[0], 1);
  }
  return out;
}

VerificationTuple Aggregator::build_verification() {
  if (!model_) throw std::logic_error("verification before final aggregation");
  const Bytes digest_input = model_digest_input(round_, model_->theta);
  secret_ = rng_.below(config_.field.q());
  VerificationTuple v;
  v.round = round_;
  v.r = config_.field.add(hash_to_field(digest_input, config_.field), *secret_);
  v.s = mac_with_element(*secret_, digest_input);
  v.roster_a = roster_a_;
  v.roster_i = *roster_i_;
  v.roster_i.signature.reset();
  tuple_ = v;
  return v;
}

VerificationTuple Aggregator::verification_for_server(NodeId server) const {
  if (!tuple_) throw std::logic_error("verification tuple not built");
  VerificationTuple v = *tuple_;
  v.roster_i = roster_for_server(server);
  v.roster_i.signature.reset();
  if (config_.signing()) sign_message(v, *keypair_, *config_.scheme);
  return v;
}

}  // namespace keyneg
