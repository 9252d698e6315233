#include "keyneg/baseline.hpp"

namespace keyneg::baseline {

LongTermSeed agree_seed(Rng& rng) {
  LongTermSeed s;
  rng.fill(s);
  return s;
}

User::User(UserId id, std::vector<LongTermSeed> seeds) : id_(id), seeds_(std::move(seeds)) {
  if (seeds_.empty()) throw std::invalid_argument("baseline user needs at least one assisting node");
}

FieldVector User::masked_update(std::uint64_t round, const FieldVector& x) const {
  FieldVector out = x;
  for (const auto& seed : seeds_) accumulate(out, baseline_prf_mask(seed, round, x.size(), x.params()));
  return out;
}

FieldVector AssistingNode::mask_sum(std::uint64_t round, std::span<const UserId> users, std::size_t length,
                                    const FieldParams& params) const {
  FieldVector total = FieldVector::zeros(params, length);
  for (UserId u : users) {
    auto it = seeds_.find(u);
    if (it == seeds_.end())
      throw std::invalid_argument("assisting node " + std::to_string(index_) + " has no seed for u" +
                                  std::to_string(u));
    accumulate(total, baseline_prf_mask(it->second, round, length, params));
  }
  return total;
}

FieldVector unmask(std::span<const FieldVector> masked_updates, std::span<const FieldVector> node_sums) {
  FieldVector total = sum(masked_updates);
  for (const auto& s : node_sums) total = keyneg::sub(total, s);
  return total;
}

}  // namespace keyneg::baseline
