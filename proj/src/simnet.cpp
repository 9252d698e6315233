#include "keyneg/simnet.hpp"

#include <algorithm>
#include <exception>

#include <nlohmann/json.hpp>

namespace keyneg {

namespace {

constexpr std::uint64_t kAggregatorKeys = 1;
constexpr std::uint64_t kAggregatorRng = 2;
constexpr std::uint64_t kServerKeys = 100;

std::uint64_t user_stream(UserId u) { return (std::uint64_t{1} << 60) ^ u; }
std::uint64_t input_stream(std::uint64_t round, UserId u) {
  return (std::uint64_t{2} << 60) ^ (round << 32) ^ u;
}
std::uint64_t sybil_stream(std::uint64_t round) { return (std::uint64_t{3} << 60) ^ round; }

// Runs fn(i) for i in [0, n), on OpenMP threads when asked. The first
// exception is rethrown after the loop.
template <class Fn>
void for_each_party(Execution exec, std::size_t n, Fn&& fn) {
  if (exec == Execution::sequential || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string theta_digest(const FieldVector& theta) {
  const Digest d = sha256(canonical_bytes(theta));
  return to_hex(std::span<const std::uint8_t>(d.data(), 16));
}

}  // namespace

std::string to_string(RoundStatus s) {
  switch (s) {
    case RoundStatus::success: return "success";
    case RoundStatus::aborted: return "aborted";
    case RoundStatus::detected: return "detected";
    case RoundStatus::failed: return "failed";
  }
  return "unknown";
}

bool Transcript::all_succeeded() const {
  return std::all_of(rounds.begin(), rounds.end(),
                     [](const RoundOutcome& r) { return r.status == RoundStatus::success; });
}

std::string Transcript::to_jsonl() const {
  using nlohmann::json;
  std::string out;
  for (const auto& r : records) {
    json j = {{"round", r.round},         {"phase", to_string(r.phase)},  {"from", to_string(r.sender)},
              {"to", to_string(r.receiver)}, {"type", type_name(r.type)}, {"digest", r.digest},
              {"delivered", r.delivered}};
    out += j.dump();
    out += '\n';
  }
  for (const auto& r : rounds) {
    json verdicts = json::object();
    for (const auto& [u, v] : r.verdicts) verdicts[to_string(NodeId::user(u))] = to_string(v);
    json rejections = json::array();
    for (const auto& x : r.rejections)
      rejections.push_back({{"at", to_string(x.at)}, {"from", to_string(x.from)}, {"reason", to_string(x.reason)}});
    json j = {{"round", r.round},
              {"outcome", to_string(r.status)},
              {"participants", r.participants},
              {"A", r.roster_a},
              {"I", r.roster_i},
              {"theta_digest", r.theta ? theta_digest(*r.theta) : std::string()},
              {"verdicts", verdicts},
              {"failures", r.failures},
              {"rejections", rejections},
              {"notes", r.notes}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

Session::Session(ScenarioScript script, Execution execution)
    : script_(std::move(script)), execution_(execution), codec_(FixedPointCodec::defaults()) {
  script_.validate();
  config_ = script_.session_config();
  config_.validate();
  transcript_.scenario = script_.name;

  std::optional<KeyPair> agg_keys;
  if (config_.signing()) {
    Rng rng = Rng::from_seed(script_.seed, kAggregatorKeys);
    agg_keys = config_.scheme->generate(rng, NodeId::aggregator());
  }
  registry_.add(NodeId::aggregator(), agg_keys ? std::optional<Bytes>(agg_keys->pub) : std::nullopt);
  aggregator_ = std::make_unique<Aggregator>(config_, Rng::from_seed(script_.seed, kAggregatorRng), agg_keys);

  for (std::size_t j = 1; j <= config_.intermediate_count; ++j) {
    std::optional<KeyPair> kp;
    if (config_.signing()) {
      Rng rng = Rng::from_seed(script_.seed, kServerKeys + j);
      kp = config_.scheme->generate(rng, NodeId::intermediate(j));
    }
    registry_.add(NodeId::intermediate(j), kp ? std::optional<Bytes>(kp->pub) : std::nullopt);
    servers_.emplace_back(j, config_, kp);
  }

  for (UserId u : script_.users) admit(u, 1);
}

void Session::admit(UserId u, std::uint64_t round) {
  auto user = std::make_unique<User>(User::join_session(u, config_, registry_, round,
                                                        Rng::from_seed(script_.seed, user_stream(u)),
                                                        UserOptions{script_.random_cycles}));
  if (key_observer_) {
    user->set_key_observer([obs = key_observer_, u](std::uint64_t r, std::span<const NodeId> c,
                                                    std::span<const FieldVector> k) { obs(r, u, c, k); });
  }
  users_[u] = std::move(user);
}

void Session::set_key_observer(SessionKeyObserver obs) {
  key_observer_ = std::move(obs);
  for (auto& [u, user] : users_) {
    user->set_key_observer([obs = key_observer_, id = u](std::uint64_t r, std::span<const NodeId> c,
                                                         std::span<const FieldVector> k) { obs(r, id, c, k); });
  }
}

const User* Session::user(UserId u) const {
  auto it = users_.find(u);
  return it == users_.end() ? nullptr : it->second.get();
}

std::vector<UserId> Session::users() const {
  std::vector<UserId> out;
  for (const auto& [u, _] : users_) out.push_back(u);
  return out;
}

FieldVector Session::default_input(std::uint64_t round, UserId user) const {
  Rng rng = Rng::from_seed(script_.seed, input_stream(round, user));
  std::vector<double> reals(config_.vector_length);
  for (auto& r : reals) r = (2.0 * rng.uniform() - 1.0) * script_.input_bound;
  return encode(reals, codec_, config_.field);
}

void Session::record(RoundOutcome& out, Phase phase, NodeId from, NodeId to, const Message& m, bool delivered) {
  TranscriptRecord rec{out.round, phase, from, to, message_type(m), message_digest(m), delivered};
  if (wiretap_) wiretap_(rec, m);
  transcript_.records.push_back(std::move(rec));
}

void Session::inject_sybils(RoundOutcome& out, const RoundEvents& ev) {
  for (const auto& sy : ev.sybils) {
    std::optional<KeyPair> forger;
    if (config_.signing()) {
      const User* signer = sy.signer ? user(*sy.signer) : nullptr;
      if (signer && signer->keypair()) {
        forger = signer->keypair();
      } else {
        Rng rng = Rng::from_seed(script_.seed, sybil_stream(out.round));
        forger = config_.scheme->generate(rng, NodeId::user(sy.claimed));
      }
    }
    Rng payload_rng = Rng::from_seed(script_.seed, sybil_stream(out.round) ^ sy.claimed);
    for (const NodeId& node : config_.nodes()) {
      MaskedShare s{NodeId::user(sy.claimed), node, out.round,
                    fresh_mask(payload_rng, config_.vector_length, config_.field), std::nullopt};
      if (forger) sign_message(s, *forger, *config_.scheme);
      record(out, Phase::masking, s.sender, node, s, true);
      const Intake r = node.role == Role::aggregator ? aggregator_->collect_share(s, registry_)
                                                      : servers_[node.id - 1].collect_share(s, registry_);
      if (r != Intake::accepted) out.rejections.push_back({node, s.sender, r});
    }
  }
}

const RoundOutcome& Session::run_round() {
  if (finished()) throw std::logic_error("all scripted rounds have run");
  RoundOutcome out;
  out.round = ++round_;
  const std::uint64_t t = out.round;
  const RoundEvents* ev = script_.events_for(t);

  // Membership changes take effect at the start of the masking phase.
  for (UserId u : deferred_joins_) {
    admit(u, t);
    out.notes.push_back("u" + std::to_string(u) + " joins (deferred from round " + std::to_string(t - 1) + ")");
  }
  deferred_joins_.clear();
  if (ev) {
    for (const auto& j : ev->joins) {
      if (j.phase == Phase::masking) {
        admit(j.user, t);
        out.notes.push_back("u" + std::to_string(j.user) + " joins");
      } else {
        deferred_joins_.push_back(j.user);
        out.notes.push_back("u" + std::to_string(j.user) + " joined during " + to_string(j.phase) +
                            "; deferred to round " + std::to_string(t + 1));
      }
    }
    for (const auto& l : ev->leaves) {
      users_.erase(l.user);
      out.notes.push_back("u" + std::to_string(l.user) + " leaves");
    }
  }

  std::map<UserId, const DropEvent*> drops;
  if (ev)
    for (const auto& d : ev->drops) drops[d.user] = &d;
  auto online = [&](UserId u, Phase p) {
    auto it = drops.find(u);
    return it == drops.end() || p < it->second->phase;
  };

  std::vector<User*> participants;
  for (auto& [u, user] : users_) {
    if (user->status() == UserStatus::active && user->start_round() <= t) {
      participants.push_back(user.get());
      out.participants.push_back(u);
    }
  }

  for (auto& s : servers_) s.begin_round(t);
  aggregator_->begin_round(t);
  if (ev && !ev->malice.empty()) aggregator_->inject_malice(ev->malice);

  // --- masking -------------------------------------------------------------
  for (User* u : participants) out.inputs[u->id()] = inputs_ ? inputs_(t, u->id()) : default_input(t, u->id());

  std::vector<std::vector<MaskedShare>> shares(participants.size());
  for_each_party(execution_, participants.size(),
                 [&](std::size_t i) { shares[i] = participants[i]->make_shares(t, out.inputs.at(participants[i]->id())); });

  for (std::size_t i = 0; i < participants.size(); ++i) {
    const UserId uid = participants[i]->id();
    auto& list = shares[i];
    std::sort(list.begin(), list.end(), [](const MaskedShare& a, const MaskedShare& b) { return a.target < b.target; });
    auto drop = drops.find(uid);
    for (const auto& s : list) {
      bool delivered = true;
      if (drop != drops.end() && drop->second->phase == Phase::masking) {
        const auto& to = drop->second->delivered_to;
        delivered = std::find(to.begin(), to.end(), s.target) != to.end();
      }
      record(out, Phase::masking, s.sender, s.target, s, delivered);
      if (!delivered) continue;
      const Intake r = s.target.role == Role::aggregator ? aggregator_->collect_share(s, registry_)
                                                          : servers_[s.target.id - 1].collect_share(s, registry_);
      if (r != Intake::accepted) out.rejections.push_back({s.target, s.sender, r});
    }
  }
  if (ev) inject_sybils(out, *ev);

  // --- rosters -------------------------------------------------------------
  for (auto& server : servers_) {
    auto r = server.emit_roster();
    if (!ok(r)) {
      out.failures.push_back(to_string(server.id()) + ": " + to_string(std::get<Failure>(r).code));
      continue;
    }
    const Roster& f = std::get<Roster>(r);
    record(out, Phase::roster, server.id(), NodeId::aggregator(), f, true);
    const Intake in = aggregator_->receive_roster(f, registry_);
    if (in != Intake::accepted) out.rejections.push_back({NodeId::aggregator(), server.id(), in});
  }

  // --- I broadcast ---------------------------------------------------------
  out.roster_a = aggregator_->roster_a().users;
  auto i_outcome = aggregator_->compute_intersection();
  if (!ok(i_outcome)) {
    const auto& f = std::get<Failure>(i_outcome);
    out.failures.push_back("agg: " + to_string(f.code) + " (" + f.detail + ")");
    out.status = RoundStatus::aborted;
    finish(out);
    return transcript_.rounds.back();
  }
  out.roster_i = std::get<Roster>(i_outcome).users;
  std::vector<Roster> sent_i;
  for (auto& server : servers_) {
    sent_i.push_back(aggregator_->roster_for_server(server.id()));
    record(out, Phase::i_broadcast, NodeId::aggregator(), server.id(), sent_i.back(), true);
  }

  // --- partial aggregation -------------------------------------------------
  std::vector<std::optional<Outcome<PartialAggregate>>> partials(servers_.size());
  for_each_party(execution_, servers_.size(),
                 [&](std::size_t j) { partials[j] = servers_[j].partial_aggregate(sent_i[j], registry_); });
  bool server_failed = false;
  for (std::size_t j = 0; j < servers_.size(); ++j) {
    auto& p = *partials[j];
    if (!ok(p)) {
      const auto& f = std::get<Failure>(p);
      out.failures.push_back(to_string(servers_[j].id()) + ": " + to_string(f.code) + " (" + f.detail + ")");
      server_failed = true;
      continue;
    }
    const auto& pa = std::get<PartialAggregate>(p);
    record(out, Phase::partial_aggregation, servers_[j].id(), NodeId::aggregator(), pa, true);
    const Intake in = aggregator_->receive_partial(pa, registry_);
    if (in != Intake::accepted) out.rejections.push_back({NodeId::aggregator(), servers_[j].id(), in});
  }

  // --- final aggregation ---------------------------------------------------
  auto model = aggregator_->final_aggregate();
  if (!ok(model)) {
    const auto& f = std::get<Failure>(model);
    out.failures.push_back("agg: " + to_string(f.code) + " (" + f.detail + ")");
    out.status = server_failed ? RoundStatus::failed : RoundStatus::aborted;
    finish(out);
    return transcript_.rounds.back();
  }
  const GlobalModel& gm = std::get<GlobalModel>(model);
  out.theta = gm.theta;

  // --- theta broadcast -------------------------------------------------------
  std::map<UserId, GlobalModel> received_model;
  for (UserId u : gm.roster_i.users) {
    GlobalModel m = aggregator_->model_for_user(u);
    const bool delivered = users_.count(u) && online(u, Phase::theta_broadcast);
    record(out, Phase::theta_broadcast, NodeId::aggregator(), NodeId::user(u), m, delivered);
    if (delivered) received_model.emplace(u, std::move(m));
  }

  // --- verification ----------------------------------------------------------
  aggregator_->build_verification();
  std::map<UserId, std::vector<VerificationTuple>> received_tuples;
  for (std::size_t j = 0; j < servers_.size(); ++j) {
    auto& server = servers_[j];
    const VerificationTuple v = aggregator_->verification_for_server(server.id());
    record(out, Phase::verification, NodeId::aggregator(), server.id(), v, true);
    auto relayed = server.relay_verification(v, registry_);
    if (!ok(relayed)) {
      const auto& f = std::get<Failure>(relayed);
      out.failures.push_back(to_string(server.id()) + ": no relay, " + to_string(f.code));
      server_failed = true;
      continue;
    }
    const auto& rv = std::get<VerificationTuple>(relayed);
    const auto& recipients = server.received_i() ? server.received_i()->users : v.roster_i.users;
    for (UserId u : recipients) {
      const bool delivered = users_.count(u) && online(u, Phase::verification);
      record(out, Phase::verification, server.id(), NodeId::user(u), rv, delivered);
      if (delivered) received_tuples[u].push_back(rv);
    }
  }

  std::vector<User*> verifiers;
  for (User* u : participants)
    if (online(u->id(), Phase::verification)) verifiers.push_back(u);
  std::vector<Verdict> verdicts(verifiers.size());
  for_each_party(execution_, verifiers.size(), [&](std::size_t i) {
    const UserId u = verifiers[i]->id();
    auto m = received_model.find(u);
    auto tv = received_tuples.find(u);
    std::span<const VerificationTuple> tuples;
    if (tv != received_tuples.end()) tuples = tv->second;
    verdicts[i] = verifiers[i]->verify_global(m == received_model.end() ? nullptr : &m->second, tuples, registry_);
  });
  for (std::size_t i = 0; i < verifiers.size(); ++i) out.verdicts[verifiers[i]->id()] = verdicts[i];

  const bool all_accept = std::all_of(verdicts.begin(), verdicts.end(), [](Verdict v) { return v == Verdict::accept; });
  if (server_failed)
    out.status = RoundStatus::failed;
  else if (!all_accept)
    out.status = RoundStatus::detected;
  else
    out.status = RoundStatus::success;
  finish(out);
  return transcript_.rounds.back();
}

void Session::finish(RoundOutcome& out) { transcript_.rounds.push_back(std::move(out)); }

const Transcript& Session::run_all() {
  while (!finished()) run_round();
  return transcript_;
}

Transcript run(const ScenarioScript& script, Execution execution) {
  Session s(script, execution);
  return s.run_all();
}

}  // namespace keyneg
