#pragma once

// Protocol messages and their canonical byte layout.
//
// Every encoding starts with the same header:
//
//   u8  version (kWireVersion)
//   u8  message type tag
//   u64 round
//   u8  sender role, u64 sender id
//
// followed by the type-specific body. All integers are little-endian and
// fixed width. The bytes a signature covers are exactly the header plus body
// (see signing_bytes); the signature section and, for relayed verification
// tuples, the relay section come after. docs/wire_format.md has the full
// byte-by-byte layout.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "keyneg/bytes.hpp"
#include "keyneg/crypto.hpp"
#include "keyneg/field.hpp"
#include "keyneg/ids.hpp"

namespace keyneg {

inline constexpr std::uint8_t kWireVersion = 1;

enum class MessageType : std::uint8_t {
  masked_share = 0x01,
  roster = 0x02,
  partial_aggregate = 0x03,
  global_model = 0x04,
  verification = 0x05,
  // Not a standalone message: domain tag for hashing/MACing a model.
  model_digest = 0x06,
};

enum class RosterKind : std::uint8_t { participants = 0, aggregator = 1, intersection = 2 };

/// Sorted, duplicate-free user list (F_j, A or I).
struct Roster {
  RosterKind kind = RosterKind::participants;
  NodeId owner;
  std::uint64_t round = 0;
  std::vector<UserId> users;
  std::optional<Signature> signature;

  /// Sorts and deduplicates users.
  static Roster make(RosterKind kind, NodeId owner, std::uint64_t round, std::vector<UserId> users);

  bool contains(UserId u) const;
  std::size_t size() const { return users.size(); }
  bool canonical() const;

  friend bool operator==(const Roster&, const Roster&) = default;
};

/// Set intersection of sorted user lists.
std::vector<UserId> intersect(std::span<const UserId> a, std::span<const UserId> b);

struct MaskedShare {
  NodeId sender;
  NodeId target;
  std::uint64_t round = 0;
  FieldVector payload;
  std::optional<Signature> signature;

  friend bool operator==(const MaskedShare&, const MaskedShare&) = default;
};

struct PartialAggregate {
  NodeId sender;
  std::uint64_t round = 0;
  FieldVector payload;
  std::optional<Signature> signature;

  friend bool operator==(const PartialAggregate&, const PartialAggregate&) = default;
};

struct GlobalModel {
  std::uint64_t round = 0;
  FieldVector theta;
  Roster roster_i;

  friend bool operator==(const GlobalModel&, const GlobalModel&) = default;
};

/// Attached by an intermediate server when it forwards a tuple.
struct Relay {
  NodeId relayer;
  Roster roster_f;

  friend bool operator==(const Relay&, const Relay&) = default;
};

/// The aggregator's consistency proof T = (R, S) with rosters A and I.
struct VerificationTuple {
  std::uint64_t round = 0;
  std::uint64_t r = 0;
  MacTag s{};
  Roster roster_a;
  Roster roster_i;
  std::optional<Signature> signature;  // covers (T, I, A)
  std::optional<Relay> relay;

  friend bool operator==(const VerificationTuple&, const VerificationTuple&) = default;
};

using Message = std::variant<MaskedShare, Roster, PartialAggregate, GlobalModel, VerificationTuple>;

MessageType message_type(const Message& m);
std::uint64_t message_round(const Message& m);
NodeId message_sender(const Message& m);
std::string type_name(MessageType t);

/// Bytes covered by the message's signature. Throws std::invalid_argument
/// when the message violates its invariants.
Bytes signing_bytes(const MaskedShare& m);
Bytes signing_bytes(const Roster& m);
Bytes signing_bytes(const PartialAggregate& m);
Bytes signing_bytes(const VerificationTuple& m);

/// Full transport encoding. Throws std::invalid_argument on invariant
/// violations (unsorted roster, wrong sender role, ...).
Bytes canonical_bytes(const Message& m);

/// Input to H(theta) and MAC_s(theta) for a round's model.
Bytes model_digest_input(std::uint64_t round, const FieldVector& theta);

enum class RejectReason { truncated, bad_tag, non_canonical, invariant_violation };
std::string to_string(RejectReason r);

struct ParseResult {
  std::optional<Message> message;
  RejectReason reason = RejectReason::truncated;
  std::string detail;

  bool ok() const { return message.has_value(); }
};

/// Accepts exactly the canonical encodings.
ParseResult parse(std::span<const std::uint8_t> bytes, const FieldParams& params);

/// Short hex digest of a message's canonical bytes, for transcripts.
std::string message_digest(const Message& m);

}  // namespace keyneg
