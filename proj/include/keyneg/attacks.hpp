#pragma once

// Scripted attack experiments: the malicious-model detection cases and the
// forward/backward secrecy contrast between fresh per-round masks and the
// PRF-seeded baseline.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keyneg/field.hpp"
#include "keyneg/scenario.hpp"
#include "keyneg/simnet.hpp"

namespace keyneg {

enum class AttackKind { sybil, forge_roster, drop_honest_user, divergent_theta };

std::string to_string(AttackKind k);
std::optional<AttackKind> parse_attack_kind(std::string_view s);

/// A one-round malicious-mode script with the attack injected. Session
/// shape (users, servers, length) and the target are drawn from the seed.
ScenarioScript attack_scenario(AttackKind kind, std::uint64_t seed);

struct AttackTrial {
  AttackKind kind = AttackKind::sybil;
  ScenarioScript script;
  RoundOutcome outcome;
  /// Honest users the attack is aimed at, and what each one observed
  /// (a verdict, or the rejection reasons their forged shares drew).
  std::map<UserId, std::string> observed;
  std::string expected;
  /// Every targeted user observed `expected`.
  bool detected = false;
};

AttackTrial run_attack(AttackKind kind, std::uint64_t seed);

struct FsbsReport {
  std::string scheme;
  UserId target = 0;
  std::uint64_t leak_round = 0;
  /// Index r-1 holds round r.
  std::vector<bool> recovered;
  std::vector<FieldVector> reconstructed;
  std::vector<FieldVector> actual;

  /// Residual statistics over rounds other than leak_round. A uniform
  /// residual has mean(r/q) near 1/2 and almost no elements in the range
  /// a genuine encoded update could occupy.
  std::size_t residual_count = 0;
  double residual_mean = 0.0;
  std::size_t residual_plausible = 0;
  double residual_chi2 = 0.0;

  std::size_t rounds_recovered() const;
  /// Rounds other than leak_round that were recovered.
  std::size_t other_rounds_recovered() const;
  /// Mean within 5 sigma of 1/2, no plausible elements, chi-square over 16
  /// buckets below the 0.1% critical value.
  bool residual_uniform() const;
};

/// The adversary sees every masked update the aggregator receives and
/// learns `seeds_leaked` of the target's long-term seeds after leak_round.
/// It unmasks each round by subtracting the leaked PRF masks.
FsbsReport attack_fsbs_baseline(const ScenarioScript& script, UserId target, std::uint64_t leak_round,
                                std::size_t seeds_leaked);

/// Same adversary against key negation: it sees the aggregator's shares for
/// every round and learns every user's round keys for leak_round.
FsbsReport attack_fsbs_ours(const ScenarioScript& script, UserId target, std::uint64_t leak_round);

}  // namespace keyneg
