// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cachesched/bp.hpp"

namespace cachesched {

/// Partial one-to-one assignment of nodes to users, with a power level per
/// matched node. Both directions are kept consistent by assign/unassign.
class Matching {
 public:
  Matching() = default;
  Matching(std::size_t nodes, std::size_t users);

  std::size_t num_nodes() const noexcept { return node_partner_.size(); }
  std::size_t num_users() const noexcept { return user_partner_.size(); }
  std::optional<std::size_t> partner_of_node(std::size_t m) const noexcept;
  std::optional<std::size_t> partner_of_user(std::size_t n) const noexcept;
  std::size_t level(std::size_t m) const noexcept { return level_[m]; }
  std::size_t size() const noexcept;

  /// Matches m to n, first unmatching whichever partners either side had.
  void assign(std::size_t m, std::size_t n, std::size_t level);
  void unassign_node(std::size_t m);

  ScheduleDecision decision() const;

  /// Empty when both maps are partial injections, mutually inverse, and every
  /// matched pair is a signal link with a valid level.
  std::string check_invariants(const Topology& topo, std::size_t levels) const;

  friend bool operator==(const Matching&, const Matching&) = default;

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> node_partner_;
  std::vector<std::size_t> user_partner_;
  std::vector<std::size_t> level_;
};

/// Users already tried in the current request chain, indexed by user.
using ExclusionSet = std::vector<bool>;

/// V_m \ E by descending max_l P_mnl, ties by ascending user index.
std::vector<std::size_t> preference_order(const Topology& topo, const Marginals& marginals,
                                          std::size_t m, const ExclusionSet& excluded);

/// argmax_l P_mnl, ties to the lowest level. n must be in V_m.
std::size_t power_for(const Topology& topo, const Marginals& marginals, std::size_t m,
                      std::size_t n);

struct MatchingStats {
  std::size_t proposals = 0;           // F comparisons in the outer loop
  std::size_t accepted = 0;
  std::size_t displacement_steps = 0;  // recursive requests inside chains
  std::size_t max_chain_depth = 0;
};

/// Candidate matching with m matched to n. A displaced node either re-requests its
/// best remaining user outside `excluded` (recursively) or goes idle when V_k is
/// exhausted or its best remaining mass is below its idle mass. `excluded` grows
/// with every user requested along the chain.
Matching match_request(const Topology& topo, const Marginals& marginals, std::size_t m,
                       std::size_t n, const Matching& current, ExclusionSet& excluded,
                       MatchingStats* stats = nullptr);

enum class NodeOrder { kAscending, kShuffled };

struct LinkScheduleOptions {
  NodeOrder order = NodeOrder::kAscending;
  std::uint64_t order_seed = 0;  // used by kShuffled
};

struct LinkScheduleResult {
  Matching matching;
  ScheduleDecision decision;
  double utility = 0.0;
  MatchingStats stats;
};

/// Proposal loop over nodes: each node walks its preference list while its best
/// remaining mass is at least its idle mass, and a proposal is kept iff it strictly
/// raises F. The result is always a valid matching.
LinkScheduleResult link_schedule(const SlotInstance& inst, const Marginals& marginals,
                                 const LinkScheduleOptions& options = {});

}  // namespace cachesched
