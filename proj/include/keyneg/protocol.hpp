#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "keyneg/crypto.hpp"
#include "keyneg/field.hpp"
#include "keyneg/ids.hpp"
#include "keyneg/messages.hpp"

namespace keyneg {

/// semi_honest omits every signature; malicious signs and verifies all of them.
enum class Mode { semi_honest, malicious };

std::string to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct SessionConfig {
  FieldParams field;
  std::size_t vector_length = 1;
  std::size_t threshold = 1;
  std::size_t intermediate_count = 1;
  Mode mode = Mode::semi_honest;
  const SignatureScheme* scheme = &default_signature_scheme();

  std::size_t node_count() const { return intermediate_count + 1; }
  /// f1..fd followed by the aggregator.
  std::vector<NodeId> nodes() const;
  std::vector<NodeId> intermediates() const;
  bool signing() const { return mode == Mode::malicious; }

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

/// In-process stand-in for a PKI: who is registered, and under which key.
class KeyRegistry {
 public:
  /// Semi-honest sessions register parties without a key.
  void add(NodeId who, std::optional<Bytes> public_key = std::nullopt);
  bool contains(NodeId who) const { return keys_.count(who) != 0; }
  /// nullptr when unregistered or keyless.
  const Bytes* public_key(NodeId who) const;

 private:
  std::map<NodeId, std::optional<Bytes>> keys_;
};

enum class FailureCode {
  below_threshold,
  missing_roster,
  missing_partial,
  bad_signature,
  protocol_violation,
  stale,
};

std::string to_string(FailureCode c);

struct Failure {
  FailureCode code;
  std::string detail;
};

template <class T>
using Outcome = std::variant<T, Failure>;

template <class T>
bool ok(const Outcome<T>& o) {
  return std::holds_alternative<T>(o);
}

/// Result of handing an inbound share or roster to a server.
enum class Intake { accepted, bad_signature, duplicate, stale, wrong_target, bad_length, unknown_sender };

std::string to_string(Intake i);

/// Raised when a withdrawn party is asked to act.
struct Refused : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class M>
void sign_message(M& m, const KeyPair& kp, const SignatureScheme& scheme) {
  m.signature = scheme.sign(kp.priv, signing_bytes(m));
}

/// False when the message is unsigned, the signer is unknown, or the
/// signature does not verify over signing_bytes(m).
template <class M>
bool verify_message(const M& m, NodeId signer, const KeyRegistry& registry, const SignatureScheme& scheme) {
  if (!m.signature) return false;
  const Bytes* pub = registry.public_key(signer);
  if (!pub) return false;
  return scheme.verify(*pub, signing_bytes(m), *m.signature);
}

}  // namespace keyneg
