// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/matching.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "cachesched/errors.hpp"
#include "cachesched/random.hpp"

namespace cachesched {

Matching::Matching(std::size_t nodes, std::size_t users)
    : node_partner_(nodes, kNone), user_partner_(users, kNone), level_(nodes, 0) {}

std::optional<std::size_t> Matching::partner_of_node(std::size_t m) const noexcept {
  if (node_partner_[m] == kNone) return std::nullopt;
  return node_partner_[m];
}

std::optional<std::size_t> Matching::partner_of_user(std::size_t n) const noexcept {
  if (user_partner_[n] == kNone) return std::nullopt;
  return user_partner_[n];
}

std::size_t Matching::size() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(node_partner_.begin(), node_partner_.end(), [](std::size_t p) {
        return p != kNone;
      }));
}

void Matching::assign(std::size_t m, std::size_t n, std::size_t level) {
  CACHESCHED_CHECK(level > 0, "matched node needs a power level");
  unassign_node(m);
  if (user_partner_[n] != kNone) unassign_node(user_partner_[n]);
  node_partner_[m] = n;
  user_partner_[n] = m;
  level_[m] = level;
}

void Matching::unassign_node(std::size_t m) {
  if (node_partner_[m] == kNone) return;
  user_partner_[node_partner_[m]] = kNone;
  node_partner_[m] = kNone;
  level_[m] = 0;
}

ScheduleDecision Matching::decision() const {
  ScheduleDecision d = all_idle(node_partner_.size());
  for (std::size_t m = 0; m < node_partner_.size(); ++m) {
    if (node_partner_[m] != kNone) d[m] = NodeDecision::serve(node_partner_[m], level_[m]);
  }
  return d;
}

std::string Matching::check_invariants(const Topology& topo, std::size_t levels) const {
  if (node_partner_.size() != topo.num_nodes() || user_partner_.size() != topo.num_users()) {
    return "matching size differs from topology";
  }
  for (std::size_t m = 0; m < node_partner_.size(); ++m) {
    const std::size_t n = node_partner_[m];
    if (n == kNone) {
      if (level_[m] != 0) return "idle node " + std::to_string(m) + " has a power level";
      continue;
    }
    if (n >= user_partner_.size()) return "node " + std::to_string(m) + " matched out of range";
    if (user_partner_[n] != m) {
      return "node " + std::to_string(m) + " -> user " + std::to_string(n) + " is not mirrored";
    }
    if (!topo.can_serve(m, n)) {
      return "node " + std::to_string(m) + " matched to non-signal user " + std::to_string(n);
    }
    if (level_[m] == 0 || level_[m] > levels) return "node " + std::to_string(m) + " bad level";
  }
  std::vector<int> seen(node_partner_.size(), 0);
  for (std::size_t n = 0; n < user_partner_.size(); ++n) {
    const std::size_t m = user_partner_[n];
    if (m == kNone) continue;
    if (m >= node_partner_.size() || node_partner_[m] != n) {
      return "user " + std::to_string(n) + " partner is not mirrored";
    }
    if (++seen[m] > 1) return "node " + std::to_string(m) + " serves two users";
  }
  return {};
}

namespace {

double log_mass(const Marginals& marginals, std::size_t m, std::size_t i) {
  const std::size_t L = marginals.levels;
  const auto& lp = marginals.log_prob[m];
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < L; ++l) best = std::max(best, lp[1 + i * L + l]);
  return best;
}

struct Candidate {
  std::size_t user = 0;
  double log_mass = 0.0;
};

// Best user of V_m \ E with its max_l log P_mnl, ties to the lower index.
std::optional<Candidate> best_remaining(const Topology& topo, const Marginals& marginals,
                                        std::size_t m, const ExclusionSet& excluded) {
  std::optional<Candidate> best;
  const auto& v = topo.node_servable[m];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (excluded[v[i]]) continue;
    const double mass = log_mass(marginals, m, i);
    if (!best || mass > best->log_mass) best = Candidate{v[i], mass};
  }
  return best;
}

Matching match_request_impl(const Topology& topo, const Marginals& marginals, std::size_t m,
                            std::size_t n, const Matching& current, ExclusionSet& excluded,
                            MatchingStats* stats, std::size_t depth) {
  CACHESCHED_CHECK(depth <= topo.num_nodes(), "request chain longer than the node count");
  if (stats) stats->max_chain_depth = std::max(stats->max_chain_depth, depth);
  Matching next = current;
  const std::optional<std::size_t> displaced = current.partner_of_user(n);
  next.assign(m, n, power_for(topo, marginals, m, n));
  if (!displaced || *displaced == m) return next;

  const std::size_t k = *displaced;
  const std::optional<Candidate> best = best_remaining(topo, marginals, k, excluded);
  if (!best || best->log_mass < marginals.log_idle(k)) return next;  // k goes idle
  excluded[best->user] = true;
  if (stats) ++stats->displacement_steps;
  return match_request_impl(topo, marginals, k, best->user, next, excluded, stats, depth + 1);
}

}  // namespace

std::vector<std::size_t> preference_order(const Topology& topo, const Marginals& marginals,
                                          std::size_t m, const ExclusionSet& excluded) {
  const auto& v = topo.node_servable[m];
  std::vector<std::size_t> order;
  std::vector<double> mass;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (excluded[v[i]]) continue;
    order.push_back(v[i]);
    mass.push_back(log_mass(marginals, m, i));
  }
  std::vector<std::size_t> idx(order.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return mass[a] > mass[b];
  });
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(order[i]);
  return out;
}

std::size_t power_for(const Topology& topo, const Marginals& marginals, std::size_t m,
                      std::size_t n) {
  const auto& v = topo.node_servable[m];
  const auto it = std::lower_bound(v.begin(), v.end(), n);
  CACHESCHED_CHECK(it != v.end() && *it == n, "power_for on a non-signal user");
  const std::size_t i = static_cast<std::size_t>(it - v.begin());
  const std::size_t L = marginals.levels;
  const auto& lp = marginals.log_prob[m];
  std::size_t best = 1;
  for (std::size_t l = 2; l <= L; ++l) {
    if (lp[i * L + l] > lp[i * L + best]) best = l;
  }
  return best;
}

Matching match_request(const Topology& topo, const Marginals& marginals, std::size_t m,
                       std::size_t n, const Matching& current, ExclusionSet& excluded,
                       MatchingStats* stats) {
  return match_request_impl(topo, marginals, m, n, current, excluded, stats, 0);
}

LinkScheduleResult link_schedule(const SlotInstance& inst, const Marginals& marginals,
                                 const LinkScheduleOptions& options) {
  const Topology& topo = inst.topology;
  LinkScheduleResult result;
  result.matching = Matching(topo.num_nodes(), topo.num_users());
  result.utility = 0.0;

  std::vector<std::size_t> order(topo.num_nodes());
  std::iota(order.begin(), order.end(), 0);
  if (options.order == NodeOrder::kShuffled) {
    Rng rng(mix_seed({options.order_seed, tag(StreamTag::kOrder)}));
    std::shuffle(order.begin(), order.end(), rng);
  }

  for (std::size_t m : order) {
    CACHESCHED_CHECK(!result.matching.partner_of_node(m), "node matched before its turn");
    ExclusionSet excluded(topo.num_users(), false);
    while (true) {
      const std::optional<Candidate> best = best_remaining(topo, marginals, m, excluded);
      if (!best || best->log_mass < marginals.log_idle(m)) break;
      excluded[best->user] = true;
      // The chain works on a copy so its exclusions stay local to this proposal.
      ExclusionSet chain = excluded;
      Matching candidate =
          match_request(topo, marginals, m, best->user, result.matching, chain, &result.stats);
      ++result.stats.proposals;
      const double f = global_utility(inst, candidate.decision());
      if (f > result.utility) {
        result.matching = std::move(candidate);
        result.utility = f;
        ++result.stats.accepted;
        break;
      }
    }
  }
  result.decision = result.matching.decision();
  return result;
}

}  // namespace cachesched
