// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cachesched/objective.hpp"

namespace cachesched {

// Decision support of node m: index 0 is idle; the i-th user of V_m at level l
// (1-based) sits at 1 + i*L + (l-1). Size L*|V_m| + 1.
std::size_t support_size(const Topology& topo, std::size_t m, std::size_t levels);
NodeDecision support_decision(const Topology& topo, std::size_t m, std::size_t levels,
                              std::size_t index);
std::size_t support_index(const Topology& topo, std::size_t m, std::size_t levels,
                          NodeDecision decision);

enum class MessageDomain {
  kLog,     // log-sum-exp arithmetic; default
  kLinear,  // direct products of probabilities; overflows for large temperature*utility
};

/// Messages on every factor-graph edge (m, n), n in U_m. Edges are numbered
/// node-major: node 0's users first, in U_m order.
///
///   to_user(e)  p_{n<-m}: node m's belief sent to user n
///   to_node(e)  p_{n->m}: user n's belief about node m
///
/// Both are vectors over node m's decision support. In kLog they hold normalized
/// log-probabilities, in kLinear normalized probabilities.
class BeliefTable {
 public:
  BeliefTable(const Topology& topo, std::size_t levels, MessageDomain domain);

  MessageDomain domain() const noexcept { return domain_; }
  std::size_t levels() const noexcept { return levels_; }
  std::size_t num_edges() const noexcept { return edge_node_.size(); }
  std::size_t edge_node(std::size_t e) const noexcept { return edge_node_[e]; }
  std::size_t edge_user(std::size_t e) const noexcept { return edge_user_[e]; }
  /// Edge of (m, n); n must be in U_m.
  std::size_t edge(std::size_t m, std::size_t n) const;
  /// Edges of node m, aligned with topology.node_users[m].
  std::span<const std::size_t> node_edges(std::size_t m) const noexcept { return node_edges_[m]; }
  /// Edges of user n, aligned with topology.user_nodes[n].
  std::span<const std::size_t> user_edges(std::size_t n) const noexcept { return user_edges_[n]; }

  std::vector<double>& to_user(std::size_t e) noexcept { return to_user_[e]; }
  const std::vector<double>& to_user(std::size_t e) const noexcept { return to_user_[e]; }
  std::vector<double>& to_node(std::size_t e) noexcept { return to_node_[e]; }
  const std::vector<double>& to_node(std::size_t e) const noexcept { return to_node_[e]; }

  double to_user_probability(std::size_t e, std::size_t index) const;
  double to_node_probability(std::size_t e, std::size_t index) const;

  /// Count of variable updates that underflowed and fell back to uniform.
  std::size_t underflow_fallbacks = 0;

 private:
  MessageDomain domain_;
  std::size_t levels_;
  std::vector<std::size_t> edge_node_, edge_user_;
  std::vector<std::vector<std::size_t>> node_edges_, user_edges_;
  std::vector<std::vector<double>> to_user_, to_node_;
};

/// Per-node marginals p_m over the decision support, as log-probabilities.
struct Marginals {
  std::size_t levels = 0;
  std::vector<std::vector<double>> log_prob;
  std::size_t underflow_fallbacks = 0;

  std::size_t num_nodes() const noexcept { return log_prob.size(); }
  double prob(std::size_t m, std::size_t index) const;
  double log_idle(std::size_t m) const noexcept { return log_prob[m][0]; }
};

/// How the approximate update turns a non-enumerated neighbor's message into
/// interference at the user.
enum class MeanFieldRule {
  kExpectedPower,  // gain * E[power] under the message
  kModalPower,     // gain * power of the most likely decision; zero if that decision is idle or serves the user
};

MeanFieldRule parse_mean_field_rule(const std::string& name);
std::string to_string(MeanFieldRule rule);

struct BpConfig {
  std::size_t iterations = 10;
  double temperature = 1.0;  // delta in exp(delta * F)
  MessageDomain domain = MessageDomain::kLog;
  /// Size of N_n for the approximate factor update; 0 selects the exact update.
  std::size_t approx_neighbors = 0;
  MeanFieldRule mean_field = MeanFieldRule::kModalPower;
  /// Maximum number of joint terms one exact factor-node message may enumerate.
  std::size_t enumeration_cap = 1'000'000;
  /// Called after every iteration with the current marginals (debug dumps).
  std::function<void(std::size_t iteration, const Marginals&)> observer;

  void validate() const;
};

/// Uniform messages 1/(L*|V_m| + 1) on every edge in both directions.
BeliefTable init_messages(const Topology& topo, std::size_t levels,
                          MessageDomain domain = MessageDomain::kLog);

/// Exact factor-node update for user n: for each m in H_n and each decision of m,
/// the expectation of exp(delta * f_n) over the other neighbors' decisions weighted
/// by their incoming messages. Throws InfeasibleError if the joint enumeration
/// exceeds `enumeration_cap`.
void factor_update(const SlotInstance& inst, double temperature, BeliefTable& table,
                   std::size_t n, std::size_t enumeration_cap = 1'000'000);

/// Approximate update: expectation is exact only over `exact_nodes` (subset of H_n);
/// every other neighbor v contributes deterministic interference gain * qbar_v, with
/// qbar_v read from v's message to n according to `rule`.
void approx_factor_update(const SlotInstance& inst, double temperature, BeliefTable& table,
                          std::size_t n, std::span<const std::size_t> exact_nodes,
                          MeanFieldRule rule = MeanFieldRule::kModalPower);

/// The k nearest nodes of H_n to user n (ties by lower index), sorted ascending.
std::vector<std::size_t> nearest_neighbors(const Topology& topo, std::size_t n, std::size_t k);

/// Variable-node update for node m: the message to each n in U_m is the normalized
/// product of the messages from all other users of U_m.
void variable_update(BeliefTable& table, std::size_t m);

/// Normalized product of all incoming factor messages at every node.
Marginals compute_marginals(const Topology& topo, const BeliefTable& table);

/// Synchronous schedule: iteration i runs every factor update on iteration-i
/// node messages, then every variable update. Marginals use the last factor messages.
Marginals run_bp(const SlotInstance& inst, const BpConfig& config);

/// Most probable decision per node: serve argmax (n, l) if its mass strictly
/// exceeds the idle mass, otherwise idle. May assign one user to several nodes.
ScheduleDecision decide(const Topology& topo, const Marginals& marginals);

/// Mean transmit power of a distribution over node m's support.
double mean_power(const Topology& topo, std::size_t m, const PowerGrid& grid,
                  std::span<const double> probabilities);

std::string marginals_to_json(const Topology& topo, const Marginals& marginals);

}  // namespace cachesched
