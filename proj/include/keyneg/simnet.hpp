#pragma once

// Deterministic round-synchronous simulation of every party over an
// in-memory bus.
//
// Each round runs the phases of `Phase` in order. The bus stamps true sender
// identities (authenticated channels) and delivers messages in a fixed order
// (sender, then receiver), so a script and its seed fully determine the
// transcript. In concurrent mode the per-party work inside a phase runs on
// OpenMP threads; deliveries still happen in the same order, so both modes
// produce identical transcripts.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "keyneg/aggregator.hpp"
#include "keyneg/field.hpp"
#include "keyneg/intermediate.hpp"
#include "keyneg/messages.hpp"
#include "keyneg/protocol.hpp"
#include "keyneg/scenario.hpp"
#include "keyneg/user.hpp"

namespace keyneg {

enum class Execution { sequential, concurrent };

struct TranscriptRecord {
  std::uint64_t round = 0;
  Phase phase = Phase::masking;
  NodeId sender;
  NodeId receiver;
  MessageType type = MessageType::masked_share;
  std::string digest;
  bool delivered = true;
};

enum class RoundStatus {
  success,
  /// Threshold not met or a roster missing; no model this round.
  aborted,
  /// At least one user's verification did not accept.
  detected,
  /// A server refused to continue (bad signature, impossible I, ...).
  failed,
};

std::string to_string(RoundStatus s);

struct Rejection {
  NodeId at;
  NodeId from;
  Intake reason = Intake::accepted;
};

struct RoundOutcome {
  std::uint64_t round = 0;
  RoundStatus status = RoundStatus::success;
  std::vector<UserId> participants;
  std::vector<UserId> roster_a;
  std::vector<UserId> roster_i;
  std::optional<FieldVector> theta;
  std::map<UserId, Verdict> verdicts;
  std::vector<std::string> failures;
  std::vector<Rejection> rejections;
  std::vector<std::string> notes;
  /// Encoded inputs of this round's participants. Kept for oracles, never exported.
  std::map<UserId, FieldVector> inputs;
};

struct Transcript {
  std::string scenario;
  std::vector<TranscriptRecord> records;
  std::vector<RoundOutcome> rounds;

  bool all_succeeded() const;
  /// Line-delimited JSON: one line per message, then one per round outcome.
  std::string to_jsonl() const;
};

using InputProvider = std::function<FieldVector(std::uint64_t round, UserId user)>;
using Wiretap = std::function<void(const TranscriptRecord&, const Message&)>;
using SessionKeyObserver = std::function<void(std::uint64_t round, UserId user, std::span<const NodeId> cycle,
                                              std::span<const FieldVector> keys)>;

class Session {
 public:
  explicit Session(ScenarioScript script, Execution execution = Execution::sequential);

  /// Replaces the default seeded-uniform inputs.
  void set_input_provider(InputProvider p) { inputs_ = std::move(p); }
  /// Sees every message the bus carries, delivered or not.
  void set_wiretap(Wiretap w) { wiretap_ = std::move(w); }
  /// Installed on every current and future user.
  void set_key_observer(SessionKeyObserver obs);

  /// Runs the next round. Throws std::logic_error past the scripted rounds.
  const RoundOutcome& run_round();
  const Transcript& run_all();

  const Transcript& transcript() const { return transcript_; }
  const ScenarioScript& script() const { return script_; }
  const SessionConfig& config() const { return config_; }
  const FixedPointCodec& codec() const { return codec_; }
  const KeyRegistry& registry() const { return registry_; }
  std::uint64_t current_round() const { return round_; }
  bool finished() const { return round_ >= script_.rounds; }

  const User* user(UserId u) const;
  std::vector<UserId> users() const;

  /// The default input of (round, user): uniform reals, fixed-point encoded.
  FieldVector default_input(std::uint64_t round, UserId user) const;

 private:
  void admit(UserId u, std::uint64_t round);
  void record(RoundOutcome& out, Phase phase, NodeId from, NodeId to, const Message& m, bool delivered);
  void inject_sybils(RoundOutcome& out, const RoundEvents& ev);
  void finish(RoundOutcome& out);

  ScenarioScript script_;
  Execution execution_;
  SessionConfig config_;
  FixedPointCodec codec_;
  KeyRegistry registry_;
  std::map<UserId, std::unique_ptr<User>> users_;
  std::vector<IntermediateServer> servers_;
  std::unique_ptr<Aggregator> aggregator_;
  std::vector<UserId> deferred_joins_;
  std::uint64_t round_ = 0;
  Transcript transcript_;
  InputProvider inputs_;
  Wiretap wiretap_;
  SessionKeyObserver key_observer_;
};

Transcript run(const ScenarioScript& script, Execution execution = Execution::sequential);

}  // namespace keyneg
