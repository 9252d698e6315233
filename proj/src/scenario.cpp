#include "keyneg/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace keyneg {

using nlohmann::json;

std::string to_string(Phase p) {
  switch (p) {
    case Phase::masking: return "masking";
    case Phase::roster: return "roster";
    case Phase::i_broadcast: return "i-broadcast";
    case Phase::partial_aggregation: return "partial-aggregation";
    case Phase::final_aggregation: return "final-aggregation";
    case Phase::theta_broadcast: return "theta-broadcast";
    case Phase::verification: return "verification";
  }
  return "unknown";
}

std::optional<Phase> parse_phase(std::string_view s) {
  for (Phase p : {Phase::masking, Phase::roster, Phase::i_broadcast, Phase::partial_aggregation,
                  Phase::final_aggregation, Phase::theta_broadcast, Phase::verification}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

SessionConfig ScenarioScript::session_config() const {
  SessionConfig c;
  c.field = FieldParams(modulus, modulus == kMersenne61 ? "mersenne61" : "custom");
  c.vector_length = vector_length;
  c.threshold = threshold;
  c.intermediate_count = intermediate_servers;
  c.mode = mode;
  return c;
}

const RoundEvents* ScenarioScript::events_for(std::uint64_t round) const {
  auto it = events.find(round);
  return it == events.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ScriptError("scenario field '" + field + "': " + what);
}

}  // namespace

void ScenarioScript::validate() const {
  if (!is_prime(modulus)) fail("modulus", "must be prime");
  if (modulus <= intermediate_servers + 1) fail("modulus", "must exceed the node count");
  if (vector_length == 0) fail("vector_length", "must be positive");
  if (threshold == 0) fail("threshold", "must be positive");
  if (intermediate_servers == 0) fail("intermediate_servers", "must be positive");
  if (rounds == 0) fail("rounds", "must be positive");
  if (!(input_bound > 0.0)) fail("input_bound", "must be positive");

  std::set<UserId> known;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!known.insert(users[i]).second) fail("users[" + std::to_string(i) + "]", "duplicate user id");
  }

  for (const auto& [round, ev] : events) {
    const std::string at = "events(round " + std::to_string(round) + ")";
    if (round == 0 || round > rounds) fail(at + ".round", "outside 1.." + std::to_string(rounds));
    for (const auto& j : ev.joins) {
      if (!known.insert(j.user).second) fail(at + ".join.user", "u" + std::to_string(j.user) + " already exists");
    }
    auto require_known = [&](UserId u, const std::string& field) {
      if (!known.count(u)) fail(at + "." + field, "unknown user u" + std::to_string(u));
    };
    for (const auto& d : ev.drops) {
      require_known(d.user, "drop.user");
      if (!d.delivered_to.empty() && d.phase != Phase::masking)
        fail(at + ".drop.delivered_to", "only meaningful for a masking-phase drop");
      for (const auto& n : d.delivered_to) {
        const bool valid = n.role == Role::aggregator ||
                           (n.role == Role::intermediate && n.id >= 1 && n.id <= intermediate_servers);
        if (!valid) fail(at + ".drop.delivered_to", "unknown node " + to_string(n));
      }
    }
    for (const auto& l : ev.leaves) require_known(l.user, "leave.user");
    for (const auto& m : ev.malice) require_known(m.target, "malice.target");
    for (const auto& s : ev.sybils) {
      if (s.signer) require_known(*s.signer, "sybil.signer");
    }
  }
}

namespace {

template <class T>
T get_field(const json& obj, const std::string& key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path + key, obj.contains(key) ? "has the wrong type" : "is required");
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get_field<T>(obj, key, path);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      fail(path + k, "unknown field");
  }
}

NodeId node_field(const std::string& s, const std::string& path) {
  auto n = parse_node_id(s);
  if (!n || n->is_user()) fail(path, "expected a server name like 'f1' or 'agg', got '" + s + "'");
  return *n;
}

Phase phase_field(const json& e, const std::string& path, Phase fallback) {
  if (!e.contains("phase")) return fallback;
  const auto s = get_field<std::string>(e, "phase", path);
  auto p = parse_phase(s);
  if (!p) fail(path + "phase", "unknown phase '" + s + "'");
  return *p;
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ScenarioScript parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    throw ScriptError("scenario syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  if (!doc.is_object()) throw ScriptError("scenario must be a JSON object");
  reject_unknown_keys(doc,
                      {"name", "seed", "mode", "modulus", "vector_length", "threshold", "intermediate_servers",
                       "rounds", "users", "random_cycles", "input_bound", "events"},
                      "");

  ScenarioScript s;
  s.name = get_or<std::string>(doc, "name", "", s.name);
  s.seed = get_or<std::uint64_t>(doc, "seed", "", s.seed);
  if (doc.contains("mode")) {
    const auto m = get_field<std::string>(doc, "mode", "");
    auto mode = parse_mode(m);
    if (!mode) fail("mode", "expected 'semi-honest' or 'malicious', got '" + m + "'");
    s.mode = *mode;
  }
  s.modulus = get_or<std::uint64_t>(doc, "modulus", "", s.modulus);
  s.vector_length = get_field<std::size_t>(doc, "vector_length", "");
  s.threshold = get_field<std::size_t>(doc, "threshold", "");
  s.intermediate_servers = get_field<std::size_t>(doc, "intermediate_servers", "");
  s.rounds = get_field<std::size_t>(doc, "rounds", "");
  s.users = get_field<std::vector<UserId>>(doc, "users", "");
  s.random_cycles = get_or<bool>(doc, "random_cycles", "", false);
  s.input_bound = get_or<double>(doc, "input_bound", "", s.input_bound);

  if (doc.contains("events")) {
    const json& events = doc.at("events");
    if (!events.is_array()) fail("events", "must be an array");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const json& e = events[i];
      const std::string path = "events[" + std::to_string(i) + "].";
      if (!e.is_object()) fail(path.substr(0, path.size() - 1), "must be an object");
      const auto type = get_field<std::string>(e, "type", path);
      const auto round = get_field<std::uint64_t>(e, "round", path);
      RoundEvents& re = s.events[round];
      if (type == "drop") {
        reject_unknown_keys(e, {"type", "round", "user", "phase", "delivered_to"}, path);
        DropEvent d;
        d.user = get_field<UserId>(e, "user", path);
        d.phase = phase_field(e, path, Phase::masking);
        for (const auto& n : get_or<std::vector<std::string>>(e, "delivered_to", path, {}))
          d.delivered_to.push_back(node_field(n, path + "delivered_to"));
        re.drops.push_back(std::move(d));
      } else if (type == "join") {
        reject_unknown_keys(e, {"type", "round", "user", "phase"}, path);
        re.joins.push_back({get_field<UserId>(e, "user", path), phase_field(e, path, Phase::masking)});
      } else if (type == "leave") {
        reject_unknown_keys(e, {"type", "round", "user"}, path);
        re.leaves.push_back({get_field<UserId>(e, "user", path)});
      } else if (type == "malice") {
        reject_unknown_keys(e, {"type", "round", "behavior", "target"}, path);
        const auto b = get_field<std::string>(e, "behavior", path);
        auto kind = parse_malice(b);
        if (!kind) fail(path + "behavior", "unknown behavior '" + b + "'");
        re.malice.push_back({*kind, get_field<UserId>(e, "target", path)});
      } else if (type == "sybil") {
        reject_unknown_keys(e, {"type", "round", "claimed", "signer"}, path);
        SybilEvent sy;
        sy.claimed = get_field<UserId>(e, "claimed", path);
        if (e.contains("signer")) sy.signer = get_field<UserId>(e, "signer", path);
        re.sybils.push_back(sy);
      } else {
        fail(path + "type", "unknown event type '" + type + "'");
      }
    }
  }
  s.validate();
  return s;
}

ScenarioScript load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScriptError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string to_json(const ScenarioScript& s) {
  json doc;
  doc["name"] = s.name;
  doc["seed"] = s.seed;
  doc["mode"] = to_string(s.mode);
  doc["modulus"] = s.modulus;
  doc["vector_length"] = s.vector_length;
  doc["threshold"] = s.threshold;
  doc["intermediate_servers"] = s.intermediate_servers;
  doc["rounds"] = s.rounds;
  doc["users"] = s.users;
  doc["random_cycles"] = s.random_cycles;
  doc["input_bound"] = s.input_bound;
  json events = json::array();
  for (const auto& [round, ev] : s.events) {
    for (const auto& j : ev.joins)
      events.push_back({{"type", "join"}, {"round", round}, {"user", j.user}, {"phase", to_string(j.phase)}});
    for (const auto& d : ev.drops) {
      json e = {{"type", "drop"}, {"round", round}, {"user", d.user}, {"phase", to_string(d.phase)}};
      if (!d.delivered_to.empty()) {
        e["delivered_to"] = json::array();
        for (const auto& n : d.delivered_to) e["delivered_to"].push_back(to_string(n));
      }
      events.push_back(std::move(e));
    }
    for (const auto& l : ev.leaves) events.push_back({{"type", "leave"}, {"round", round}, {"user", l.user}});
    for (const auto& m : ev.malice)
      events.push_back({{"type", "malice"}, {"round", round}, {"behavior", to_string(m.kind)}, {"target", m.target}});
    for (const auto& sy : ev.sybils) {
      json e = {{"type", "sybil"}, {"round", round}, {"claimed", sy.claimed}};
      if (sy.signer) e["signer"] = *sy.signer;
      events.push_back(std::move(e));
    }
  }
  doc["events"] = std::move(events);
  return doc.dump(2);
}

}  // namespace keyneg
