#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "keyneg/crypto.hpp"
#include "keyneg/field.hpp"
#include "keyneg/messages.hpp"
#include "keyneg/protocol.hpp"

namespace keyneg {

enum class UserStatus { active, withdrawn };

enum class Verdict { accept, detect_inconsistency, detect_bad_roster, detect_bad_signature };

std::string to_string(Verdict v);

/// Shares for one input given per-node keys listed in cycle order:
/// share[j] = x * n^{-1} + keys[j] - keys[j-1 mod n]. The n shares sum to x.
std::vector<FieldVector> key_negation_shares(const FieldVector& x, std::span<const FieldVector> keys);

struct UserOptions {
  /// Shuffle the node cycle every round instead of the canonical order.
  bool random_cycle = false;
};

/// Sees the round keys (cycle order) just before they are erased. Only the
/// secrecy experiments install one.
using KeyObserver =
    std::function<void(std::uint64_t round, std::span<const NodeId> cycle, std::span<const FieldVector> keys)>;

class User {
 public:
  User(UserId id, SessionConfig config, Rng rng, std::optional<KeyPair> keys = std::nullopt,
       UserOptions options = {});

  /// Creates a user that takes part from `round` on. The only setup is
  /// registering its identity (and, in malicious mode, its public key).
  static User join_session(UserId id, const SessionConfig& config, KeyRegistry& registry, std::uint64_t round,
                           Rng rng, UserOptions options = {});

  UserId id() const { return id_; }
  NodeId node() const { return NodeId::user(id_); }
  UserStatus status() const { return status_; }
  std::uint64_t start_round() const { return start_round_; }
  const std::optional<KeyPair>& keypair() const { return keypair_; }
  /// Cycle used for the most recent make_shares call.
  const std::vector<NodeId>& cycle() const { return cycle_; }

  /// One share per node. Draws fresh keys, erases them before returning.
  /// Throws std::invalid_argument on a length mismatch, Refused when withdrawn.
  std::vector<MaskedShare> make_shares(std::uint64_t round, const FieldVector& x);

  /// Checks the round's global model against the relayed verification
  /// tuples. A missing model or missing/duplicated relays count as a bad
  /// roster. Any verdict other than accept withdraws the user for good.
  Verdict verify_global(const GlobalModel* model, std::span<const VerificationTuple> tuples,
                        const KeyRegistry& registry);

  /// True while per-round key material is held; false between rounds.
  bool holds_key_material() const { return !keys_.empty(); }

  void set_key_observer(KeyObserver obs) { observer_ = std::move(obs); }

 private:
  Verdict evaluate(const GlobalModel* model, std::span<const VerificationTuple> tuples,
                   const KeyRegistry& registry) const;

  UserId id_;
  SessionConfig config_;
  Rng rng_;
  std::optional<KeyPair> keypair_;
  UserOptions options_;
  UserStatus status_ = UserStatus::active;
  std::uint64_t start_round_ = 1;
  std::uint64_t last_round_ = 0;
  std::vector<NodeId> cycle_;
  std::vector<FieldVector> keys_;
  KeyObserver observer_;
};

}  // namespace keyneg
