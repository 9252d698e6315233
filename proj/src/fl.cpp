#include "keyneg/fl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "keyneg/crypto.hpp"

namespace keyneg {

namespace {

constexpr std::uint64_t kCentreStream = 0xf1'0001;
constexpr std::uint64_t kSampleStream = 0xf1'0002;
constexpr std::uint64_t kOrderStream = 0xf1'0003;

double gaussian(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

Dataset sample_blobs(const std::vector<std::vector<double>>& centres, std::size_t count, double noise, Rng& rng) {
  Dataset d;
  d.features = centres.front().size();
  d.x.reserve(count * d.features);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t c = rng.below(centres.size());
    for (double mu : centres[c]) d.x.push_back(mu + noise * gaussian(rng));
    d.y.push_back(c);
  }
  return d;
}

std::uint64_t local_seed(std::uint64_t seed, UserId u, std::uint64_t round) {
  return seed ^ (u << 32) ^ round;
}

}  // namespace

void FlConfig::validate() const {
  if (users < 2) throw std::invalid_argument("fl: need at least two users");
  if (classes < 2) throw std::invalid_argument("fl: need at least two classes");
  if (features == 0 || samples_per_user == 0 || test_samples == 0 || rounds == 0)
    throw std::invalid_argument("fl: sizes must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("fl: learning rate must be positive");
  if (threshold > users) throw std::invalid_argument("fl: threshold exceeds the user count");
}

BlobTask make_blob_task(const FlConfig& cfg) {
  cfg.validate();
  Rng centre_rng = Rng::from_seed(cfg.seed, kCentreStream);
  std::vector<std::vector<double>> centres(cfg.classes, std::vector<double>(cfg.features));
  for (auto& c : centres)
    for (double& v : c) v = gaussian(centre_rng);

  BlobTask task;
  Rng rng = Rng::from_seed(cfg.seed, kSampleStream);
  for (std::size_t u = 0; u < cfg.users; ++u)
    task.users.push_back(sample_blobs(centres, cfg.samples_per_user, cfg.noise, rng));
  task.test = sample_blobs(centres, cfg.test_samples, cfg.noise, rng);
  return task;
}

SoftmaxModel::SoftmaxModel(std::size_t classes, std::size_t features)
    : classes_(classes), features_(features), w_(classes * (features + 1), 0.0) {}

std::size_t SoftmaxModel::predict(const double* sample) const {
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t c = 0; c < classes_; ++c) {
    const double* wc = &w_[c * (features_ + 1)];
    double s = wc[features_];
    for (std::size_t f = 0; f < features_; ++f) s += wc[f] * sample[f];
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

double SoftmaxModel::accuracy(const Dataset& d) const {
  if (d.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (predict(&d.x[i * features_]) == d.y[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

std::vector<double> SoftmaxModel::local_delta(const Dataset& d, double lr, std::size_t epochs,
                                              std::uint64_t seed) const {
  std::vector<double> w = w_;
  std::vector<std::size_t> order(d.size());
  std::vector<double> logits(classes_);
  Rng rng = Rng::from_seed(seed, kOrderStream);
  const std::size_t stride = features_ + 1;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i : order) {
      const double* x = &d.x[i * features_];
      double peak = -INFINITY;
      for (std::size_t c = 0; c < classes_; ++c) {
        const double* wc = &w[c * stride];
        double s = wc[features_];
        for (std::size_t f = 0; f < features_; ++f) s += wc[f] * x[f];
        logits[c] = s;
        peak = std::max(peak, s);
      }
      double z = 0.0;
      for (double& l : logits) z += (l = std::exp(l - peak));
      for (std::size_t c = 0; c < classes_; ++c) {
        const double g = logits[c] / z - (c == d.y[i] ? 1.0 : 0.0);
        double* wc = &w[c * stride];
        for (std::size_t f = 0; f < features_; ++f) wc[f] -= lr * g * x[f];
        wc[features_] -= lr * g;
      }
    }
  }
  for (std::size_t k = 0; k < w.size(); ++k) w[k] -= w_[k];
  return w;
}

double FlResult::max_gap() const {
  double g = 0.0;
  for (const auto& r : rounds) g = std::max(g, r.aggregate_gap);
  return g;
}

bool FlResult::all_exact() const {
  return !rounds.empty() && std::all_of(rounds.begin(), rounds.end(), [](const FlRound& r) { return r.exact; });
}

double FlResult::final_secure_accuracy() const { return rounds.empty() ? 0.0 : rounds.back().secure_accuracy; }
double FlResult::final_plain_accuracy() const { return rounds.empty() ? 0.0 : rounds.back().plain_accuracy; }

std::string FlResult::to_csv() const {
  std::ostringstream out;
  out << "round,secure_acc,plain_acc,gap\n";
  for (const auto& r : rounds)
    out << r.round << ',' << r.secure_accuracy << ',' << r.plain_accuracy << ',' << r.aggregate_gap << '\n';
  return out.str();
}

FlResult train_paired(const FlConfig& cfg, Execution execution) {
  cfg.validate();
  const BlobTask task = make_blob_task(cfg);

  ScenarioScript script;
  script.name = "fl";
  script.seed = cfg.seed;
  script.mode = cfg.mode;
  script.vector_length = cfg.model_length();
  script.threshold = cfg.threshold;
  script.intermediate_servers = cfg.intermediate_servers;
  script.rounds = cfg.rounds;
  for (UserId u = 1; u <= cfg.users; ++u) script.users.push_back(u);

  Session session(script, execution);
  const FixedPointCodec& codec = session.codec();
  const FieldParams& field = session.config().field;
  codec.check_headroom(field);

  SoftmaxModel secure(cfg.classes, cfg.features);
  SoftmaxModel plain(cfg.classes, cfg.features);
  std::map<UserId, std::vector<double>> deltas;
  std::map<UserId, FieldVector> encoded;
  session.set_input_provider([&](std::uint64_t round, UserId u) {
    auto delta = secure.local_delta(task.users[u - 1], cfg.learning_rate, cfg.local_epochs,
                                    local_seed(cfg.seed, u, round));
    FieldVector x = encode(delta, codec, field);
    deltas[u] = std::move(delta);
    encoded[u] = x;
    return x;
  });

  FlResult result;
  result.gap_bound = static_cast<double>(cfg.users) / codec.scale();
  const std::size_t len = cfg.model_length();
  for (std::uint64_t r = 1; r <= cfg.rounds; ++r) {
    deltas.clear();
    encoded.clear();
    const RoundOutcome& out = session.run_round();
    FlRound rec;
    rec.round = r;

    // Only an accepted model is used for training.
    if (out.status == RoundStatus::success && out.theta) {
      const std::vector<double> total = decode(*out.theta, codec);
      std::vector<double> reference(len, 0.0);
      FieldVector field_sum = FieldVector::zeros(field, len);
      for (UserId u : out.roster_i) {
        for (std::size_t k = 0; k < len; ++k) reference[k] += deltas.at(u)[k];
        accumulate(field_sum, encoded.at(u));
      }
      rec.exact = field_sum == *out.theta;
      rec.contributors = out.roster_i.size();
      const double inv = 1.0 / static_cast<double>(rec.contributors);
      for (std::size_t k = 0; k < len; ++k) {
        rec.aggregate_gap = std::max(rec.aggregate_gap, std::abs(total[k] - reference[k]));
        secure.weights()[k] += total[k] * inv;
      }
    }

    // Plaintext FedAvg over the same contributors and local seeds.
    const std::vector<UserId>& who = out.roster_i.empty() ? script.users : out.roster_i;
    std::vector<double> avg(len, 0.0);
    for (UserId u : who) {
      const auto d = plain.local_delta(task.users[u - 1], cfg.learning_rate, cfg.local_epochs,
                                       local_seed(cfg.seed, u, r));
      for (std::size_t k = 0; k < len; ++k) avg[k] += d[k];
    }
    for (std::size_t k = 0; k < len; ++k) plain.weights()[k] += avg[k] / static_cast<double>(who.size());

    rec.secure_accuracy = secure.accuracy(task.test);
    rec.plain_accuracy = plain.accuracy(task.test);
    result.rounds.push_back(rec);
  }
  return result;
}

}  // namespace keyneg
