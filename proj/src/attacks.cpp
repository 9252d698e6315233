#include "keyneg/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "keyneg/baseline.hpp"
#include "keyneg/crypto.hpp"
#include "keyneg/kernels.hpp"

namespace keyneg {

namespace {

constexpr std::uint64_t kShapeStream = 0xa77ac4;
constexpr std::uint64_t kSeedStream = 0x5eed;

}  // namespace

std::string to_string(AttackKind k) {
  switch (k) {
    case AttackKind::sybil: return "sybil";
    case AttackKind::forge_roster: return "roster-forge";
    case AttackKind::drop_honest_user: return "drop-honest-user";
    case AttackKind::divergent_theta: return "inconsistency";
  }
  return "unknown";
}

std::optional<AttackKind> parse_attack_kind(std::string_view s) {
  for (AttackKind k :
       {AttackKind::sybil, AttackKind::forge_roster, AttackKind::drop_honest_user, AttackKind::divergent_theta}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

ScenarioScript attack_scenario(AttackKind kind, std::uint64_t seed) {
  Rng rng = Rng::from_seed(seed, kShapeStream);
  ScenarioScript s;
  s.name = to_string(kind);
  s.seed = seed;
  s.mode = Mode::malicious;
  s.rounds = 1;
  const std::size_t m = 3 + rng.below(8);
  s.intermediate_servers = 2 + rng.below(4);
  s.vector_length = 1 + rng.below(32);
  s.threshold = 2;
  for (UserId u = 1; u <= m; ++u) s.users.push_back(u);
  const UserId target = 1 + rng.below(m);

  RoundEvents& ev = s.events[1];
  switch (kind) {
    case AttackKind::sybil: {
      UserId signer = 1 + rng.below(m - 1);
      if (signer >= target) ++signer;
      ev.sybils.push_back({target, signer});
      break;
    }
    case AttackKind::forge_roster: ev.malice.push_back({Malice::forge_roster, target}); break;
    case AttackKind::drop_honest_user: ev.malice.push_back({Malice::drop_honest_user, target}); break;
    case AttackKind::divergent_theta: ev.malice.push_back({Malice::send_divergent_theta, target}); break;
  }
  return s;
}

AttackTrial run_attack(AttackKind kind, std::uint64_t seed) {
  AttackTrial trial;
  trial.kind = kind;
  trial.script = attack_scenario(kind, seed);
  Session session(trial.script);
  trial.outcome = session.run_round();
  const auto& out = trial.outcome;
  const RoundEvents& ev = trial.script.events.at(1);

  auto verdict_of = [&](UserId u) {
    auto it = out.verdicts.find(u);
    return it == out.verdicts.end() ? std::string("none") : to_string(it->second);
  };

  if (kind == AttackKind::sybil) {
    // The claimed user is the victim: every node must refuse the forgeries.
    const UserId victim = ev.sybils.front().claimed;
    trial.expected = to_string(Intake::bad_signature);
    std::vector<std::string> reasons;
    for (const auto& r : out.rejections)
      if (r.from == NodeId::user(victim)) reasons.push_back(to_string(r.reason));
    const bool all_bad_sig = reasons.size() == session.config().node_count() &&
                             std::all_of(reasons.begin(), reasons.end(),
                                         [&](const std::string& r) { return r == trial.expected; });
    trial.observed[victim] = all_bad_sig ? trial.expected : (reasons.empty() ? "accepted" : reasons.front());
  } else if (kind == AttackKind::divergent_theta) {
    const UserId victim = ev.malice.front().target;
    trial.expected = to_string(Verdict::detect_inconsistency);
    trial.observed[victim] = verdict_of(victim);
  } else {
    // Both roster attacks touch every participant.
    trial.expected = to_string(Verdict::detect_bad_roster);
    for (UserId u : out.participants) trial.observed[u] = verdict_of(u);
  }
  trial.detected = !trial.observed.empty() &&
                   std::all_of(trial.observed.begin(), trial.observed.end(),
                               [&](const auto& kv) { return kv.second == trial.expected; });
  return trial;
}

std::size_t FsbsReport::rounds_recovered() const {
  return static_cast<std::size_t>(std::count(recovered.begin(), recovered.end(), true));
}

std::size_t FsbsReport::other_rounds_recovered() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < recovered.size(); ++i)
    if (recovered[i] && i + 1 != leak_round) ++n;
  return n;
}

bool FsbsReport::residual_uniform() const {
  if (residual_count == 0) return false;
  const double sigma = 1.0 / std::sqrt(12.0 * static_cast<double>(residual_count));
  constexpr double kChi2Df15 = 37.70;
  return std::abs(residual_mean - 0.5) <= 5.0 * sigma && residual_plausible == 0 && residual_chi2 < kChi2Df15;
}

namespace {

// Fills the residual fields from (guess - actual) over rounds != leak_round.
void residual_stats(FsbsReport& rep, const FixedPointCodec& codec) {
  constexpr std::size_t kBuckets = 16;
  std::vector<std::size_t> buckets(kBuckets, 0);
  double total = 0.0;
  const auto plausible = static_cast<std::int64_t>(codec.clip_bound() * codec.scale());
  for (std::size_t i = 0; i < rep.actual.size(); ++i) {
    if (i + 1 == rep.leak_round) continue;
    const FieldVector r = sub(rep.reconstructed[i], rep.actual[i]);
    const std::uint64_t q = r.params().q();
    for (std::uint64_t e : r.elems()) {
      const double u = static_cast<double>(e) / static_cast<double>(q);
      total += u;
      buckets[std::min(kBuckets - 1, static_cast<std::size_t>(u * kBuckets))]++;
      if (std::llabs(centered(e, q)) <= plausible) rep.residual_plausible++;
      rep.residual_count++;
    }
  }
  if (rep.residual_count == 0) return;
  rep.residual_mean = total / static_cast<double>(rep.residual_count);
  const double expect = static_cast<double>(rep.residual_count) / kBuckets;
  for (std::size_t b : buckets) rep.residual_chi2 += (b - expect) * (b - expect) / expect;
}

void require_target(const ScenarioScript& script, UserId target, std::uint64_t leak_round) {
  if (std::find(script.users.begin(), script.users.end(), target) == script.users.end())
    throw std::invalid_argument("target must be an initial user");
  if (leak_round == 0 || leak_round > script.rounds) throw std::invalid_argument("leak round outside the run");
}

}  // namespace

FsbsReport attack_fsbs_baseline(const ScenarioScript& script, UserId target, std::uint64_t leak_round,
                                std::size_t seeds_leaked) {
  require_target(script, target, leak_round);
  const std::size_t d = script.intermediate_servers;
  if (seeds_leaked > d) throw std::invalid_argument("more seeds leaked than assisting nodes exist");

  // Inputs are the ones the key-negation session would use, so both
  // experiments attack the same updates.
  const Session reference(script);
  const SessionConfig& cfg = reference.config();

  Rng rng = Rng::from_seed(script.seed, kSeedStream);
  std::vector<baseline::AssistingNode> nodes;
  for (std::size_t a = 0; a < d; ++a) nodes.emplace_back(a + 1);
  std::map<UserId, baseline::User> users;
  for (UserId u : script.users) {
    std::vector<LongTermSeed> seeds;
    for (std::size_t a = 0; a < d; ++a) {
      seeds.push_back(baseline::agree_seed(rng));
      nodes[a].add_user(u, seeds.back());
    }
    users.emplace(u, baseline::User(u, std::move(seeds)));
  }

  // What the adversary learns at the leak: a prefix of the target's seeds.
  const auto& all_seeds = users.at(target).seeds();
  const std::vector<LongTermSeed> leaked(all_seeds.begin(), all_seeds.begin() + seeds_leaked);

  FsbsReport rep;
  rep.scheme = "prf-baseline";
  rep.target = target;
  rep.leak_round = leak_round;
  for (std::uint64_t r = 1; r <= script.rounds; ++r) {
    const FieldVector x = reference.default_input(r, target);
    const FieldVector observed = users.at(target).masked_update(r, x);
    FieldVector guess = observed;
    for (const auto& seed : leaked) guess = sub(guess, baseline_prf_mask(seed, r, cfg.vector_length, cfg.field));
    rep.recovered.push_back(guess == x);
    rep.reconstructed.push_back(std::move(guess));
    rep.actual.push_back(x);
  }
  residual_stats(rep, reference.codec());
  return rep;
}

FsbsReport attack_fsbs_ours(const ScenarioScript& script, UserId target, std::uint64_t leak_round) {
  require_target(script, target, leak_round);
  Session session(script);
  const SessionConfig& cfg = session.config();
  const std::uint64_t q = cfg.field.q();

  struct Leak {
    std::vector<NodeId> cycle;
    std::vector<FieldVector> keys;
  };
  std::map<UserId, Leak> leaked;
  session.set_key_observer([&](std::uint64_t r, UserId u, std::span<const NodeId> cycle,
                               std::span<const FieldVector> keys) {
    if (r == leak_round) leaked[u] = Leak{{cycle.begin(), cycle.end()}, {keys.begin(), keys.end()}};
  });
  std::map<std::uint64_t, FieldVector> aggregator_view;
  session.set_wiretap([&](const TranscriptRecord& rec, const Message& m) {
    if (rec.sender == NodeId::user(target) && rec.receiver == NodeId::aggregator() && rec.delivered)
      if (const auto* s = std::get_if<MaskedShare>(&m)) aggregator_view[rec.round] = s->payload;
  });
  const Transcript& tr = session.run_all();

  const Leak& leak = leaked.at(target);
  const auto pos = static_cast<std::size_t>(
      std::find(leak.cycle.begin(), leak.cycle.end(), NodeId::aggregator()) - leak.cycle.begin());
  const std::size_t n = leak.cycle.size();
  const FieldVector& k_cur = leak.keys[pos];
  const FieldVector& k_prev = leak.keys[(pos + n - 1) % n];

  FsbsReport rep;
  rep.scheme = "key-negation";
  rep.target = target;
  rep.leak_round = leak_round;
  for (const auto& outcome : tr.rounds) {
    auto seen = aggregator_view.find(outcome.round);
    auto x = outcome.inputs.find(target);
    if (seen == aggregator_view.end() || x == outcome.inputs.end())
      throw std::logic_error("target did not reach the aggregator in round " + std::to_string(outcome.round));
    // c = x/n + k_cur - k_prev, so x = n * (c - k_cur + k_prev) when the keys match.
    const FieldVector unkeyed = add(sub(seen->second, k_cur), k_prev);
    FieldVector guess = FieldVector::zeros(cfg.field, cfg.vector_length);
    kernels::parallel::scale(unkeyed.elems(), n % q, guess.mutable_elems(), q);
    rep.recovered.push_back(guess == x->second);
    rep.reconstructed.push_back(std::move(guess));
    rep.actual.push_back(x->second);
  }
  residual_stats(rep, session.codec());
  return rep;
}

}  // namespace keyneg
