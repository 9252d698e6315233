#include "keyneg/messages.hpp"

#include <algorithm>
#include <stdexcept>

namespace keyneg {

std::string to_string(const NodeId& n) {
  switch (n.role) {
    case Role::user: return "u" + std::to_string(n.id);
    case Role::intermediate: return "f" + std::to_string(n.id);
    case Role::aggregator: return "agg";
  }
  return "?";
}

std::optional<NodeId> parse_node_id(std::string_view s) {
  if (s == "agg") return NodeId::aggregator();
  if (s.size() < 2 || (s[0] != 'u' && s[0] != 'f')) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return s[0] == 'u' ? NodeId::user(v) : NodeId::intermediate(v);
}

// --- rosters ---------------------------------------------------------------

Roster Roster::make(RosterKind kind, NodeId owner, std::uint64_t round, std::vector<UserId> users) {
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  return Roster{kind, owner, round, std::move(users), std::nullopt};
}

bool Roster::contains(UserId u) const { return std::binary_search(users.begin(), users.end(), u); }

bool Roster::canonical() const { return std::adjacent_find(users.begin(), users.end(), std::greater_equal<>()) == users.end(); }

std::vector<UserId> intersect(std::span<const UserId> a, std::span<const UserId> b) {
  std::vector<UserId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// --- encoding --------------------------------------------------------------

MessageType message_type(const Message& m) {
  struct V {
    MessageType operator()(const MaskedShare&) const { return MessageType::masked_share; }
    MessageType operator()(const Roster&) const { return MessageType::roster; }
    MessageType operator()(const PartialAggregate&) const { return MessageType::partial_aggregate; }
    MessageType operator()(const GlobalModel&) const { return MessageType::global_model; }
    MessageType operator()(const VerificationTuple&) const { return MessageType::verification; }
  };
  return std::visit(V{}, m);
}

std::uint64_t message_round(const Message& m) {
  return std::visit([](const auto& x) { return x.round; }, m);
}

NodeId message_sender(const Message& m) {
  struct V {
    NodeId operator()(const MaskedShare& x) const { return x.sender; }
    NodeId operator()(const Roster& x) const { return x.owner; }
    NodeId operator()(const PartialAggregate& x) const { return x.sender; }
    NodeId operator()(const GlobalModel&) const { return NodeId::aggregator(); }
    NodeId operator()(const VerificationTuple& x) const {
      return x.relay ? x.relay->relayer : NodeId::aggregator();
    }
  };
  return std::visit(V{}, m);
}

std::string type_name(MessageType t) {
  switch (t) {
    case MessageType::masked_share: return "masked_share";
    case MessageType::roster: return "roster";
    case MessageType::partial_aggregate: return "partial_aggregate";
    case MessageType::global_model: return "global_model";
    case MessageType::verification: return "verification";
    case MessageType::model_digest: return "model_digest";
  }
  return "unknown";
}

std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::truncated: return "truncated";
    case RejectReason::bad_tag: return "bad-tag";
    case RejectReason::non_canonical: return "non-canonical";
    case RejectReason::invariant_violation: return "invariant-violation";
  }
  return "unknown";
}

namespace {

void usage(const std::string& what) { throw std::invalid_argument("malformed message: " + what); }

void put_node(Bytes& out, const NodeId& n) {
  put_u8(out, static_cast<std::uint8_t>(n.role));
  put_u64(out, n.id);
}

void put_header(Bytes& out, MessageType t, std::uint64_t round, const NodeId& sender) {
  put_u8(out, kWireVersion);
  put_u8(out, static_cast<std::uint8_t>(t));
  put_u64(out, round);
  put_node(out, sender);
}

void put_signature(Bytes& out, const std::optional<Signature>& sig) {
  if (!sig) {
    put_u8(out, 0);
    return;
  }
  if (sig->bytes.size() > 0xffff) usage("signature too long");
  put_u8(out, 1);
  put_u16(out, static_cast<std::uint16_t>(sig->bytes.size()));
  put_bytes(out, sig->bytes);
}

void require_role(const NodeId& n, Role r, const char* what) {
  if (n.role != r) usage(std::string(what) + " has the wrong role");
}

void check_roster(const Roster& r) {
  if (!r.canonical()) usage("roster not sorted/deduplicated");
  const Role expected = r.kind == RosterKind::participants ? Role::intermediate : Role::aggregator;
  require_role(r.owner, expected, "roster owner");
}

Bytes roster_signing_bytes(const Roster& r) {
  check_roster(r);
  Bytes out;
  put_header(out, MessageType::roster, r.round, r.owner);
  put_u8(out, static_cast<std::uint8_t>(r.kind));
  put_u64(out, r.users.size());
  for (auto u : r.users) put_u64(out, u);
  return out;
}

Bytes roster_bytes(const Roster& r) {
  Bytes out = roster_signing_bytes(r);
  put_signature(out, r.signature);
  return out;
}

void put_nested(Bytes& out, const Bytes& inner) {
  put_u64(out, inner.size());
  put_bytes(out, inner);
}

}  // namespace

Bytes signing_bytes(const MaskedShare& m) {
  require_role(m.sender, Role::user, "share sender");
  if (m.target.is_user()) usage("share target must be a server");
  Bytes out;
  put_header(out, MessageType::masked_share, m.round, m.sender);
  put_node(out, m.target);
  append_canonical(out, m.payload);
  return out;
}

Bytes signing_bytes(const Roster& m) { return roster_signing_bytes(m); }

Bytes signing_bytes(const PartialAggregate& m) {
  require_role(m.sender, Role::intermediate, "partial aggregate sender");
  Bytes out;
  put_header(out, MessageType::partial_aggregate, m.round, m.sender);
  append_canonical(out, m.payload);
  return out;
}

Bytes signing_bytes(const VerificationTuple& m) {
  if (m.roster_a.kind != RosterKind::aggregator || m.roster_i.kind != RosterKind::intersection)
    usage("verification rosters have the wrong kind");
  Bytes out;
  put_header(out, MessageType::verification, m.round, NodeId::aggregator());
  put_u64(out, m.r);
  put_bytes(out, m.s);
  put_nested(out, roster_bytes(m.roster_a));
  put_nested(out, roster_bytes(m.roster_i));
  return out;
}

Bytes model_digest_input(std::uint64_t round, const FieldVector& theta) {
  Bytes out;
  put_header(out, MessageType::model_digest, round, NodeId::aggregator());
  append_canonical(out, theta);
  return out;
}

Bytes canonical_bytes(const Message& msg) {
  struct V {
    Bytes operator()(const MaskedShare& m) const {
      Bytes out = signing_bytes(m);
      put_signature(out, m.signature);
      return out;
    }
    Bytes operator()(const Roster& m) const { return roster_bytes(m); }
    Bytes operator()(const PartialAggregate& m) const {
      Bytes out = signing_bytes(m);
      put_signature(out, m.signature);
      return out;
    }
    Bytes operator()(const GlobalModel& m) const {
      if (m.roster_i.kind != RosterKind::intersection) usage("global model roster must be I");
      Bytes out;
      put_header(out, MessageType::global_model, m.round, NodeId::aggregator());
      append_canonical(out, m.theta);
      put_nested(out, roster_bytes(m.roster_i));
      return out;
    }
    Bytes operator()(const VerificationTuple& m) const {
      Bytes out = signing_bytes(m);
      put_signature(out, m.signature);
      if (!m.relay) {
        put_u8(out, 0);
        return out;
      }
      require_role(m.relay->relayer, Role::intermediate, "relayer");
      if (m.relay->roster_f.kind != RosterKind::participants) usage("relayed roster must be F_j");
      put_u8(out, 1);
      put_node(out, m.relay->relayer);
      put_nested(out, roster_bytes(m.relay->roster_f));
      return out;
    }
  };
  return std::visit(V{}, msg);
}

std::string message_digest(const Message& m) {
  const Bytes b = canonical_bytes(m);
  const Digest d = sha256(b);
  return to_hex(std::span(d).first(16));
}

// --- parsing ---------------------------------------------------------------

namespace {

struct Reject {
  RejectReason reason;
  std::string detail;
};

[[noreturn]] void reject(RejectReason r, std::string detail) { throw Reject{r, std::move(detail)}; }

struct Header {
  MessageType type;
  std::uint64_t round;
  NodeId sender;
};

NodeId read_node(ByteReader& in) {
  const std::uint8_t role = in.u8();
  if (role < 1 || role > 3) reject(RejectReason::non_canonical, "unknown role byte");
  const std::uint64_t id = in.u64();
  NodeId n{static_cast<Role>(role), id};
  if (n.role == Role::aggregator && id != 0) reject(RejectReason::non_canonical, "aggregator id must be 0");
  return n;
}

Header read_header(ByteReader& in) {
  const std::uint8_t version = in.u8();
  if (version != kWireVersion) reject(RejectReason::bad_tag, "unsupported version");
  const std::uint8_t tag = in.u8();
  if (tag < 0x01 || tag > 0x05) reject(RejectReason::bad_tag, "unknown message type");
  Header h;
  h.type = static_cast<MessageType>(tag);
  h.round = in.u64();
  h.sender = read_node(in);
  return h;
}

std::optional<Signature> read_signature(ByteReader& in) {
  const std::uint8_t flag = in.u8();
  if (flag == 0) return std::nullopt;
  if (flag != 1) reject(RejectReason::non_canonical, "bad signature flag");
  const std::uint16_t len = in.u16();
  auto b = in.take(len);
  return Signature{Bytes(b.begin(), b.end())};
}

FieldVector read_vector(ByteReader& in, const FieldParams& params) {
  try {
    return read_field_vector(in, params);
  } catch (const std::invalid_argument& e) {
    reject(RejectReason::non_canonical, e.what());
  }
}

void expect_role(const NodeId& n, Role r, const char* what) {
  if (n.role != r) reject(RejectReason::invariant_violation, std::string(what) + " has the wrong role");
}

Roster read_roster_body(ByteReader& in, const Header& h) {
  const std::uint8_t kind = in.u8();
  if (kind > 2) reject(RejectReason::non_canonical, "unknown roster kind");
  Roster r;
  r.kind = static_cast<RosterKind>(kind);
  r.owner = h.sender;
  r.round = h.round;
  const std::uint64_t count = in.u64();
  if (count > in.remaining() / 8) throw Truncated();
  r.users.resize(count);
  for (auto& u : r.users) u = in.u64();
  for (std::size_t i = 1; i < r.users.size(); ++i) {
    if (r.users[i] == r.users[i - 1]) reject(RejectReason::invariant_violation, "duplicate user in roster");
    if (r.users[i] < r.users[i - 1]) reject(RejectReason::non_canonical, "roster not sorted");
  }
  expect_role(r.owner, r.kind == RosterKind::participants ? Role::intermediate : Role::aggregator,
              "roster owner");
  r.signature = read_signature(in);
  return r;
}

Roster read_nested_roster(ByteReader& in, RosterKind kind, std::uint64_t round) {
  const std::uint64_t len = in.u64();
  if (len > in.remaining()) throw Truncated();
  ByteReader sub(in.take(len));
  const Header h = read_header(sub);
  if (h.type != MessageType::roster) reject(RejectReason::bad_tag, "nested message is not a roster");
  Roster r = read_roster_body(sub, h);
  if (!sub.done()) reject(RejectReason::non_canonical, "trailing bytes in nested roster");
  if (r.kind != kind) reject(RejectReason::invariant_violation, "nested roster has the wrong kind");
  if (r.round != round) reject(RejectReason::invariant_violation, "nested roster from another round");
  return r;
}

Message parse_body(ByteReader& in, const Header& h, const FieldParams& params) {
  switch (h.type) {
    case MessageType::masked_share: {
      expect_role(h.sender, Role::user, "share sender");
      MaskedShare m;
      m.sender = h.sender;
      m.round = h.round;
      m.target = read_node(in);
      if (m.target.is_user()) reject(RejectReason::invariant_violation, "share addressed to a user");
      m.payload = read_vector(in, params);
      m.signature = read_signature(in);
      return m;
    }
    case MessageType::roster:
      return read_roster_body(in, h);
    case MessageType::partial_aggregate: {
      expect_role(h.sender, Role::intermediate, "partial aggregate sender");
      PartialAggregate m;
      m.sender = h.sender;
      m.round = h.round;
      m.payload = read_vector(in, params);
      m.signature = read_signature(in);
      return m;
    }
    case MessageType::global_model: {
      expect_role(h.sender, Role::aggregator, "global model sender");
      GlobalModel m;
      m.round = h.round;
      m.theta = read_vector(in, params);
      m.roster_i = read_nested_roster(in, RosterKind::intersection, h.round);
      return m;
    }
    case MessageType::verification: {
      expect_role(h.sender, Role::aggregator, "verification sender");
      VerificationTuple m;
      m.round = h.round;
      m.r = in.u64();
      if (m.r >= params.q()) reject(RejectReason::non_canonical, "R out of range");
      auto s = in.take(32);
      std::copy(s.begin(), s.end(), m.s.begin());
      m.roster_a = read_nested_roster(in, RosterKind::aggregator, h.round);
      m.roster_i = read_nested_roster(in, RosterKind::intersection, h.round);
      m.signature = read_signature(in);
      const std::uint8_t flag = in.u8();
      if (flag == 1) {
        Relay relay;
        relay.relayer = read_node(in);
        expect_role(relay.relayer, Role::intermediate, "relayer");
        relay.roster_f = read_nested_roster(in, RosterKind::participants, h.round);
        if (relay.roster_f.owner != relay.relayer)
          reject(RejectReason::invariant_violation, "relayed roster owner differs from relayer");
        m.relay = std::move(relay);
      } else if (flag != 0) {
        reject(RejectReason::non_canonical, "bad relay flag");
      }
      return m;
    }
    case MessageType::model_digest:
      break;
  }
  reject(RejectReason::bad_tag, "unknown message type");
}

}  // namespace

ParseResult parse(std::span<const std::uint8_t> bytes, const FieldParams& params) {
  ParseResult res;
  try {
    ByteReader in(bytes);
    const Header h = read_header(in);
    Message m = parse_body(in, h, params);
    if (!in.done()) reject(RejectReason::non_canonical, "trailing bytes");
    res.message = std::move(m);
  } catch (const Truncated&) {
    res.reason = RejectReason::truncated;
    res.detail = "buffer ended early";
  } catch (const Reject& r) {
    res.reason = r.reason;
    res.detail = r.detail;
  }
  return res;
}

}  // namespace keyneg
