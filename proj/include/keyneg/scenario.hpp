#pragma once

// Declarative description of a simulation run. The on-disk form is JSON; see
// docs/scenario_format.md for the schema.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "keyneg/aggregator.hpp"
#include "keyneg/field.hpp"
#include "keyneg/ids.hpp"
#include "keyneg/protocol.hpp"

namespace keyneg {

/// Round phases in execution order.
enum class Phase {
  masking,
  roster,
  i_broadcast,
  partial_aggregation,
  final_aggregation,
  theta_broadcast,
  verification,
};

std::string to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view s);

/// The user goes offline at `phase`. During masking its shares still reach
/// the nodes listed in delivered_to.
struct DropEvent {
  UserId user = 0;
  Phase phase = Phase::masking;
  std::vector<NodeId> delivered_to;
};

/// `phase` is when the join request arrives; anything after masking defers
/// participation to the next round.
struct JoinEvent {
  UserId user = 0;
  Phase phase = Phase::masking;
};

struct LeaveEvent {
  UserId user = 0;
};

/// Shares claiming to come from `claimed`, signed with `signer`'s key (or a
/// fresh unregistered key when signer is unset).
struct SybilEvent {
  UserId claimed = 0;
  std::optional<UserId> signer;
};

struct RoundEvents {
  std::vector<DropEvent> drops;
  std::vector<JoinEvent> joins;
  std::vector<LeaveEvent> leaves;
  std::vector<MaliceAction> malice;
  std::vector<SybilEvent> sybils;
};

struct ScenarioScript {
  std::string name = "unnamed";
  std::uint64_t seed = 1;
  Mode mode = Mode::semi_honest;
  std::uint64_t modulus = kMersenne61;
  std::size_t vector_length = 16;
  std::size_t threshold = 2;
  std::size_t intermediate_servers = 2;
  std::size_t rounds = 1;
  std::vector<UserId> users;
  bool random_cycles = false;
  /// Default inputs are uniform reals in [-input_bound, input_bound].
  double input_bound = 1.0;
  std::map<std::uint64_t, RoundEvents> events;

  SessionConfig session_config() const;
  const RoundEvents* events_for(std::uint64_t round) const;

  /// Throws ScriptError naming the offending field.
  void validate() const;
};

struct ScriptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses and validates. Syntax errors report line and column; semantic
/// errors report the JSON field path.
ScenarioScript parse_scenario(std::string_view text);
ScenarioScript load_scenario(const std::string& path);
std::string to_json(const ScenarioScript& s);

}  // namespace keyneg
