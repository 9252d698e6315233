#pragma once

// PRF-seeded single-setup masking, kept as the comparison target.
//
// Each user shares one long-term seed with every assisting node. The round-t
// mask is PRF(seed, t), so the seeds alone determine all past and future
// masks.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "keyneg/crypto.hpp"
#include "keyneg/field.hpp"
#include "keyneg/ids.hpp"

namespace keyneg::baseline {

/// Stand-in for the key agreement run once at setup.
LongTermSeed agree_seed(Rng& rng);

class User {
 public:
  User(UserId id, std::vector<LongTermSeed> seeds);

  UserId id() const { return id_; }
  /// One seed per assisting node, in node order.
  const std::vector<LongTermSeed>& seeds() const { return seeds_; }

  /// x + sum over assisting nodes of PRF(seed_a, round).
  FieldVector masked_update(std::uint64_t round, const FieldVector& x) const;

 private:
  UserId id_;
  std::vector<LongTermSeed> seeds_;
};

class AssistingNode {
 public:
  explicit AssistingNode(std::size_t index) : index_(index) {}

  void add_user(UserId user, const LongTermSeed& seed) { seeds_[user] = seed; }
  /// Sum of this node's round masks over the listed users.
  FieldVector mask_sum(std::uint64_t round, std::span<const UserId> users, std::size_t length,
                       const FieldParams& params) const;

 private:
  std::size_t index_;
  std::map<UserId, LongTermSeed> seeds_;
};

/// sum(masked) - sum(node mask sums).
FieldVector unmask(std::span<const FieldVector> masked_updates, std::span<const FieldVector> node_sums);

}  // namespace keyneg::baseline
