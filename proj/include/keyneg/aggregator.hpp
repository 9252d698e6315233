#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "keyneg/crypto.hpp"
#include "keyneg/messages.hpp"
#include "keyneg/protocol.hpp"

namespace keyneg {

/// Scripted aggregator misbehaviour, used by the attack scenarios.
enum class Malice {
  /// Deliver theta' != theta to the target user.
  send_divergent_theta,
  /// Send the first intermediate server an I without the target user.
  forge_roster,
  /// Remove the target from I although it is in A and every F_j.
  drop_honest_user,
};

std::string to_string(Malice m);
std::optional<Malice> parse_malice(std::string_view s);

struct MaliceAction {
  Malice kind;
  UserId target = 0;
};

class Aggregator {
 public:
  Aggregator(SessionConfig config, Rng rng, std::optional<KeyPair> keys = std::nullopt);

  NodeId id() const { return NodeId::aggregator(); }
  std::uint64_t round() const { return round_; }

  void begin_round(std::uint64_t round);
  /// Misbehaviour for the current round only; cleared by begin_round.
  void inject_malice(std::vector<MaliceAction> script) { malice_ = std::move(script); }
  bool honest() const { return malice_.empty(); }

  /// The aggregator's own share; accepted senders form A.
  Intake collect_share(const MaskedShare& share, const KeyRegistry& registry);
  /// F_j from an intermediate server, signature-checked in malicious mode.
  Intake receive_roster(const Roster& roster, const KeyRegistry& registry);
  /// I = A ∩ F_1 ∩ ... ∩ F_d, signed in malicious mode; aborts on |A| < t,
  /// a missing or unverifiable F_j, or |I| < t.
  Outcome<Roster> compute_intersection();
  /// I as sent to one intermediate server (differs only under forge_roster).
  Roster roster_for_server(NodeId server) const;

  Intake receive_partial(const PartialAggregate& partial, const KeyRegistry& registry);
  /// theta = sum of own shares over I plus every partial aggregate.
  Outcome<GlobalModel> final_aggregate();
  /// Model delivered to one user (differs only under send_divergent_theta).
  GlobalModel model_for_user(UserId user) const;

  /// Fresh s_t; R = H(theta) + s_t and S = MAC_{s_t}(theta).
  VerificationTuple build_verification();
  /// The tuple sent to one intermediate server, signed over (T, I, A).
  VerificationTuple verification_for_server(NodeId server) const;

  const Roster& roster_a() const { return roster_a_; }
  const std::optional<Roster>& roster_i() const { return roster_i_; }
  const std::optional<GlobalModel>& model() const { return model_; }
  /// s_t of the current round, exposed for tests.
  std::optional<std::uint64_t> round_secret() const { return secret_; }

 private:
  const MaliceAction* find_malice(Malice kind) const;

  SessionConfig config_;
  Rng rng_;
  std::optional<KeyPair> keypair_;
  std::uint64_t round_ = 0;
  std::vector<MaliceAction> malice_;

  std::map<UserId, FieldVector> inbox_;
  Roster roster_a_;
  std::map<NodeId, Roster> rosters_f_;
  std::optional<Roster> roster_i_;
  std::optional<Roster> forged_i_;
  std::map<NodeId, FieldVector> partials_;
  std::optional<GlobalModel> model_;
  std::optional<std::uint64_t> secret_;
  std::optional<VerificationTuple> tuple_;
};

}  // namespace keyneg
