#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace keyneg {

enum class Role : std::uint8_t { user = 1, intermediate = 2, aggregator = 3 };

using UserId = std::uint64_t;

/// Party identity. Ordering puts users first, then intermediate servers by
/// id, then the aggregator, which is the canonical cycle order.
struct NodeId {
  Role role = Role::user;
  std::uint64_t id = 0;

  static NodeId user(UserId u) { return {Role::user, u}; }
  static NodeId intermediate(std::uint64_t j) { return {Role::intermediate, j}; }
  static NodeId aggregator() { return {Role::aggregator, 0}; }

  bool is_user() const { return role == Role::user; }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

/// "u7", "f2", "agg".
std::string to_string(const NodeId& n);
std::optional<NodeId> parse_node_id(std::string_view s);

}  // namespace keyneg

template <>
struct std::hash<keyneg::NodeId> {
  std::size_t operator()(const keyneg::NodeId& n) const noexcept {
    return std::hash<std::uint64_t>{}(n.id * 4 + static_cast<std::uint64_t>(n.role));
  }
};
