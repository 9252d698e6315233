#include "keyneg/user.hpp"

#include <algorithm>

#include "keyneg/kernels.hpp"

namespace keyneg {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::detect_inconsistency: return "detect_inconsistency";
    case Verdict::detect_bad_roster: return "detect_bad_roster";
    case Verdict::detect_bad_signature: return "detect_bad_signature";
  }
  return "unknown";
}

std::vector<FieldVector> key_negation_shares(const FieldVector& x, std::span<const FieldVector> keys) {
  const std::size_t n = keys.size();
  if (n == 0) throw std::invalid_argument("no nodes to mask for");
  for (const auto& k : keys) {
    if (!(k.params() == x.params()) || k.size() != x.size())
      throw std::invalid_argument("key shape does not match the input");
  }
  const FieldVector scaled = scale_by_inverse(x, n);
  const std::uint64_t q = x.params().q();
  std::vector<FieldVector> shares;
  shares.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    FieldVector share = FieldVector::zeros(x.params(), x.size());
    kernels::parallel::mask_share(scaled.elems(), keys[j].elems(), keys[(j + n - 1) % n].elems(),
                                  share.mutable_elems(), q);
    shares.push_back(std::move(share));
  }
  return shares;
}

User::User(UserId id, SessionConfig config, Rng rng, std::optional<KeyPair> keys, UserOptions options)
    : id_(id), config_(std::move(config)), rng_(std::move(rng)), keypair_(std::move(keys)), options_(options) {
  config_.validate();
  if (config_.signing() && !keypair_) throw std::invalid_argument("malicious mode requires a signing key");
  cycle_ = config_.nodes();
}

User User::join_session(UserId id, const SessionConfig& config, KeyRegistry& registry, std::uint64_t round,
                        Rng rng, UserOptions options) {
  std::optional<KeyPair> kp;
  if (config.signing()) kp = config.scheme->generate(rng, NodeId::user(id));
  registry.add(NodeId::user(id), kp ? std::optional<Bytes>(kp->pub) : std::nullopt);
  User u(id, config, std::move(rng), std::move(kp), options);
  u.start_round_ = round;
  return u;
}

std::vector<MaskedShare> User::make_shares(std::uint64_t round, const FieldVector& x) {
  if (status_ != UserStatus::active) throw Refused("user " + std::to_string(id_) + " has withdrawn");
  if (x.size() != config_.vector_length || !(x.params() == config_.field))
    throw std::invalid_argument("input length does not match the session vector length");

  cycle_ = config_.nodes();
  if (options_.random_cycle) {
    for (std::size_t i = cycle_.size(); i > 1; --i) std::swap(cycle_[i - 1], cycle_[rng_.below(i)]);
  }

  keys_.clear();
  keys_.reserve(cycle_.size());
  for (std::size_t j = 0; j < cycle_.size(); ++j) keys_.push_back(fresh_mask(rng_, x.size(), config_.field));

  std::vector<FieldVector> payloads = key_negation_shares(x, keys_);
  if (observer_) observer_(round, cycle_, keys_);
  for (auto& k : keys_) k.wipe();
  keys_.clear();

  std::vector<MaskedShare> shares;
  shares.reserve(payloads.size());
  for (std::size_t j = 0; j < payloads.size(); ++j) {
    MaskedShare s{node(), cycle_[j], round, std::move(payloads[j]), std::nullopt};
    if (config_.signing()) sign_message(s, *keypair_, *config_.scheme);
    shares.push_back(std::move(s));
  }
  last_round_ = round;
  return shares;
}

Verdict User::verify_global(const GlobalModel* model, std::span<const VerificationTuple> tuples,
                            const KeyRegistry& registry) {
  if (status_ != UserStatus::active) throw Refused("user " + std::to_string(id_) + " has withdrawn");
  const Verdict v = evaluate(model, tuples, registry);
  if (v != Verdict::accept) status_ = UserStatus::withdrawn;
  return v;
}

Verdict User::evaluate(const GlobalModel* model, std::span<const VerificationTuple> tuples,
                       const KeyRegistry& registry) const {
  // Arrival order must not matter: work on the tuples sorted by relayer.
  std::vector<const VerificationTuple*> sorted;
  for (const auto& t : tuples) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](const VerificationTuple* a, const VerificationTuple* b) {
    const NodeId ra = a->relay ? a->relay->relayer : NodeId::aggregator();
    const NodeId rb = b->relay ? b->relay->relayer : NodeId::aggregator();
    return ra < rb;
  });

  if (config_.signing()) {
    for (const auto* t : sorted) {
      if (!verify_message(*t, NodeId::aggregator(), registry, *config_.scheme)) return Verdict::detect_bad_signature;
      if (t->relay && !verify_message(t->relay->roster_f, t->relay->relayer, registry, *config_.scheme))
        return Verdict::detect_bad_signature;
    }
  }

  // I = A ∩ (∩_j F_j), with exactly one relay from every intermediate server.
  if (!model || model->round != last_round_) return Verdict::detect_bad_roster;
  const auto servers = config_.intermediates();
  if (sorted.size() != servers.size()) return Verdict::detect_bad_roster;
  for (std::size_t j = 0; j < servers.size(); ++j) {
    const auto* t = sorted[j];
    if (!t->relay || t->relay->relayer != servers[j] || t->relay->roster_f.owner != servers[j])
      return Verdict::detect_bad_roster;
    if (t->round != last_round_ || t->relay->roster_f.round != last_round_) return Verdict::detect_bad_roster;
  }
  const auto& claimed_i = model->roster_i.users;
  const auto& a = sorted.front()->roster_a.users;
  std::vector<UserId> expected = a;
  for (const auto* t : sorted) {
    if (t->roster_a.users != a || t->roster_i.users != claimed_i) return Verdict::detect_bad_roster;
    expected = intersect(expected, t->relay->roster_f.users);
  }
  if (expected != claimed_i) return Verdict::detect_bad_roster;
  if (claimed_i.size() < config_.threshold) return Verdict::detect_bad_roster;
  if (!model->roster_i.contains(id_)) return Verdict::detect_bad_roster;

  // s_t = R - H(theta); every relayed S must be MAC_{s_t}(theta) and identical.
  const Bytes digest_input = model_digest_input(model->round, model->theta);
  const std::uint64_t h = hash_to_field(digest_input, config_.field);
  const auto& first = *sorted.front();
  for (const auto* t : sorted) {
    if (t->r != first.r || t->s != first.s) return Verdict::detect_inconsistency;
    const std::uint64_t s_t = config_.field.sub(t->r % config_.field.q(), h);
    if (mac_with_element(s_t, digest_input) != t->s) return Verdict::detect_inconsistency;
  }
  return Verdict::accept;
}

}  // namespace keyneg
