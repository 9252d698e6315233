#include "keyneg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <stdexcept>

#include "keyneg/aggregator.hpp"
#include "keyneg/baseline.hpp"
#include "keyneg/crypto.hpp"
#include "keyneg/intermediate.hpp"
#include "keyneg/user.hpp"

namespace keyneg {

namespace {

using Clock = std::chrono::steady_clock;

template <class Fn>
double time_micros(Fn&& fn) {
  const auto start = Clock::now();
  fn();
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

template <class Fn>
double median_of(std::size_t reps, Fn&& fn) {
  std::vector<double> samples;
  for (std::size_t r = 0; r < reps; ++r) samples.push_back(fn(r));
  return median(std::move(samples));
}

std::size_t sample_size(const BenchParams& p) {
  return p.masking_sample == 0 ? p.users : std::min(p.users, p.masking_sample);
}

std::vector<BenchRow> bench_keyneg(const BenchParams& p) {
  SessionConfig cfg;
  cfg.vector_length = p.vec_len;
  cfg.threshold = std::min<std::size_t>(2, p.users);
  cfg.intermediate_count = p.servers;
  cfg.mode = p.mode;
  cfg.validate();

  KeyRegistry registry;
  auto keys_for = [&](NodeId who, std::uint64_t stream) -> std::optional<KeyPair> {
    if (!cfg.signing()) {
      registry.add(who);
      return std::nullopt;
    }
    Rng rng = Rng::from_seed(p.seed, stream);
    KeyPair kp = cfg.scheme->generate(rng, who);
    registry.add(who, kp.pub);
    return kp;
  };
  Aggregator agg(cfg, Rng::from_seed(p.seed, 2), keys_for(NodeId::aggregator(), 1));
  std::vector<IntermediateServer> servers;
  for (std::size_t j = 1; j <= p.servers; ++j) servers.emplace_back(j, cfg, keys_for(NodeId::intermediate(j), 100 + j));

  std::vector<User> users;
  users.reserve(p.users);
  for (UserId u = 1; u <= p.users; ++u)
    users.push_back(User::join_session(u, cfg, registry, 1, Rng::from_seed(p.seed, (std::uint64_t{1} << 60) ^ u)));

  Rng input_rng = Rng::from_seed(p.seed, 3);
  const FieldVector x = fresh_mask(input_rng, p.vec_len, cfg.field);

  std::vector<BenchRow> rows;
  auto row = [&](std::string role, std::string phase, double micros) {
    rows.push_back({p.masker, p.mode, p.users, p.vec_len, p.servers, std::move(role), std::move(phase), micros});
  };

  const std::size_t timed = sample_size(p);
  row("user", "masking", median_of(p.reps, [&](std::size_t r) {
        return time_micros([&] {
                 for (std::size_t i = 0; i < timed; ++i) users[i].make_shares(r + 1, x);
               }) /
               static_cast<double>(timed);
      }));
  if (p.masking_only) return rows;

  const std::uint64_t round = p.reps + 1;
  agg.begin_round(round);
  for (auto& s : servers) s.begin_round(round);
  for (auto& u : users) {
    for (auto& share : u.make_shares(round, x)) {
      if (share.target.role == Role::aggregator)
        agg.collect_share(share, registry);
      else
        servers[share.target.id - 1].collect_share(share, registry);
    }
  }
  for (auto& s : servers) agg.receive_roster(std::get<Roster>(s.emit_roster()), registry);
  if (!ok(agg.compute_intersection())) throw std::logic_error("benchmark round lost its intersection");

  std::vector<PartialAggregate> partials(servers.size());
  row("intermediate", "partial_aggregation", median_of(p.reps, [&](std::size_t) {
        auto& s = servers.front();
        const Roster i = agg.roster_for_server(s.id());
        return time_micros([&] { partials[0] = std::get<PartialAggregate>(s.partial_aggregate(i, registry)); });
      }));
  for (std::size_t j = 0; j < servers.size(); ++j) {
    if (j > 0) partials[j] = std::get<PartialAggregate>(servers[j].partial_aggregate(agg.roster_for_server(servers[j].id()), registry));
    agg.receive_partial(partials[j], registry);
  }

  row("aggregator", "final_aggregation",
      median_of(p.reps, [&](std::size_t) { return time_micros([&] { (void)agg.final_aggregate(); }); }));

  row("aggregator", "verification", median_of(p.reps, [&](std::size_t) {
        return time_micros([&] {
          agg.build_verification();
          for (auto& s : servers) (void)agg.verification_for_server(s.id());
        });
      }));

  agg.build_verification();
  std::vector<VerificationTuple> tuples;
  for (auto& s : servers)
    tuples.push_back(std::get<VerificationTuple>(s.relay_verification(agg.verification_for_server(s.id()), registry)));
  const GlobalModel model = agg.model_for_user(users.front().id());
  row("user", "verification", median_of(p.reps, [&](std::size_t) {
        Verdict v = Verdict::accept;
        const double t = time_micros([&] { v = users.front().verify_global(&model, tuples, registry); });
        if (v != Verdict::accept) throw std::logic_error("benchmark verification did not accept");
        return t;
      }));
  return rows;
}

std::vector<BenchRow> bench_baseline(const BenchParams& p) {
  const FieldParams field;
  Rng rng = Rng::from_seed(p.seed, 4);
  std::vector<baseline::AssistingNode> nodes;
  for (std::size_t a = 0; a < p.servers; ++a) nodes.emplace_back(a + 1);
  std::vector<baseline::User> users;
  std::vector<UserId> ids;
  for (UserId u = 1; u <= p.users; ++u) {
    std::vector<LongTermSeed> seeds;
    for (auto& node : nodes) {
      seeds.push_back(baseline::agree_seed(rng));
      node.add_user(u, seeds.back());
    }
    users.emplace_back(u, std::move(seeds));
    ids.push_back(u);
  }
  const FieldVector x = fresh_mask(rng, p.vec_len, field);

  std::vector<BenchRow> rows;
  auto row = [&](std::string role, std::string phase, double micros) {
    rows.push_back({p.masker, p.mode, p.users, p.vec_len, p.servers, std::move(role), std::move(phase), micros});
  };

  const std::size_t timed = sample_size(p);
  row("user", "masking", median_of(p.reps, [&](std::size_t r) {
        return time_micros([&] {
                 for (std::size_t i = 0; i < timed; ++i) (void)users[i].masked_update(r + 1, x);
               }) /
               static_cast<double>(timed);
      }));
  if (p.masking_only) return rows;

  const std::uint64_t round = p.reps + 1;
  std::vector<FieldVector> masked;
  for (const auto& u : users) masked.push_back(u.masked_update(round, x));
  std::vector<FieldVector> node_sums(nodes.size());
  row("intermediate", "partial_aggregation", median_of(p.reps, [&](std::size_t) {
        return time_micros([&] { node_sums[0] = nodes[0].mask_sum(round, ids, p.vec_len, field); });
      }));
  for (std::size_t a = 1; a < nodes.size(); ++a) node_sums[a] = nodes[a].mask_sum(round, ids, p.vec_len, field);
  row("aggregator", "final_aggregation", median_of(p.reps, [&](std::size_t) {
        return time_micros([&] { (void)baseline::unmask(masked, node_sums); });
      }));
  return rows;
}

}  // namespace

std::string to_string(Masker m) { return m == Masker::keyneg ? "keyneg" : "prf-baseline"; }

std::optional<Masker> parse_masker(std::string_view s) {
  if (s == "keyneg") return Masker::keyneg;
  if (s == "prf-baseline") return Masker::prf_baseline;
  return std::nullopt;
}

std::vector<BenchRow> bench_point(const BenchParams& p) {
  if (p.users == 0 || p.vec_len == 0 || p.servers == 0 || p.reps == 0)
    throw std::invalid_argument("benchmark sizes must be positive");
  return p.masker == Masker::keyneg ? bench_keyneg(p) : bench_baseline(p);
}

std::string bench_csv_header() { return "masker,mode,users,vec_len,servers,role,phase,micros_median"; }

std::string to_csv(const BenchRow& r) {
  std::ostringstream out;
  out << to_string(r.masker) << ',' << to_string(r.mode) << ',' << r.users << ',' << r.vec_len << ',' << r.servers
      << ',' << r.role << ',' << r.phase << ',' << r.micros_median;
  return out.str();
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of nothing");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  return (hi + *std::max_element(v.begin(), mid)) / 2.0;
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("need at least three paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return syy == 0.0 ? 1.0 : 0.0;
  return sxy * sxy / (sxx * syy);
}

}  // namespace keyneg
