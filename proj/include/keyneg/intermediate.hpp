#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "keyneg/messages.hpp"
#include "keyneg/protocol.hpp"

namespace keyneg {

/// Collects one share per user, reports F_j, sums the shares of I and
/// relays the aggregator's verification tuple.
class IntermediateServer {
 public:
  IntermediateServer(std::uint64_t index, SessionConfig config, std::optional<KeyPair> keys = std::nullopt);

  NodeId id() const { return id_; }
  std::uint64_t round() const { return round_; }

  /// Clears all per-round state.
  void begin_round(std::uint64_t round);

  /// First share per user wins. In malicious mode the sender's signature must verify.
  Intake collect_share(const MaskedShare& share, const KeyRegistry& registry);

  /// F_j when |F_j| >= threshold; a below_threshold failure (abort) otherwise.
  Outcome<Roster> emit_roster();

  /// Sum of the stored shares of exactly the users in I.
  Outcome<PartialAggregate> partial_aggregate(const Roster& roster_i, const KeyRegistry& registry);

  /// Forwards the tuple with F_j attached, after checking the aggregator's signature.
  Outcome<VerificationTuple> relay_verification(const VerificationTuple& tuple, const KeyRegistry& registry);

  const Roster& roster_f() const { return roster_f_; }
  /// I as received this round (empty before the I broadcast).
  const std::optional<Roster>& received_i() const { return received_i_; }
  bool aborted() const { return aborted_; }

 private:
  NodeId id_;
  SessionConfig config_;
  std::optional<KeyPair> keypair_;
  std::uint64_t round_ = 0;
  std::map<UserId, FieldVector> inbox_;
  Roster roster_f_;
  std::optional<Roster> received_i_;
  bool aborted_ = false;
};

}  // namespace keyneg
