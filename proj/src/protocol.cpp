#include "keyneg/protocol.hpp"

namespace keyneg {

std::string to_string(Mode m) { return m == Mode::malicious ? "malicious" : "semi-honest"; }

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "semi-honest" || s == "semi_honest") return Mode::semi_honest;
  if (s == "malicious") return Mode::malicious;
  return std::nullopt;
}

std::vector<NodeId> SessionConfig::intermediates() const {
  std::vector<NodeId> out;
  for (std::size_t j = 1; j <= intermediate_count; ++j) out.push_back(NodeId::intermediate(j));
  return out;
}

std::vector<NodeId> SessionConfig::nodes() const {
  auto out = intermediates();
  out.push_back(NodeId::aggregator());
  return out;
}

void SessionConfig::validate() const {
  if (vector_length == 0) throw std::invalid_argument("vector length must be positive");
  if (threshold == 0) throw std::invalid_argument("threshold must be positive");
  if (intermediate_count == 0) throw std::invalid_argument("at least one intermediate server is required");
  if (!scheme) throw std::invalid_argument("no signature scheme configured");
  field.require_node_count(node_count());
}

void KeyRegistry::add(NodeId who, std::optional<Bytes> public_key) { keys_[who] = std::move(public_key); }

const Bytes* KeyRegistry::public_key(NodeId who) const {
  auto it = keys_.find(who);
  if (it == keys_.end() || !it->second) return nullptr;
  return &*it->second;
}

std::string to_string(FailureCode c) {
  switch (c) {
    case FailureCode::below_threshold: return "below_threshold";
    case FailureCode::missing_roster: return "missing_roster";
    case FailureCode::missing_partial: return "missing_partial";
    case FailureCode::bad_signature: return "bad_signature";
    case FailureCode::protocol_violation: return "protocol_violation";
    case FailureCode::stale: return "stale";
  }
  return "unknown";
}

std::string to_string(Intake i) {
  switch (i) {
    case Intake::accepted: return "accepted";
    case Intake::bad_signature: return "bad-signature";
    case Intake::duplicate: return "duplicate";
    case Intake::stale: return "stale";
    case Intake::wrong_target: return "wrong-target";
    case Intake::bad_length: return "bad-length";
    case Intake::unknown_sender: return "unknown-sender";
  }
  return "unknown";
}

}  // namespace keyneg
