// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cachesched/bp.hpp"
#include "cachesched/errors.hpp"
#include "support/instances.hpp"

namespace cachesched {
namespace {

using testing::deterministic_channel;
using testing::node_at;
using testing::OwnedInstance;
using testing::user_at;

double message_probability(const BeliefTable& t, const std::vector<double>& msg, std::size_t idx) {
  return t.domain() == MessageDomain::kLog ? std::exp(msg[idx]) : msg[idx];
}

void set_message(BeliefTable& t, std::vector<double>& msg, const std::vector<double>& probs) {
  ASSERT_EQ(msg.size(), probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    msg[i] = t.domain() == MessageDomain::kLog ? std::log(probs[i]) : probs[i];
  }
}

std::vector<double> random_probabilities(std::size_t size, Rng& rng) {
  std::vector<double> p(size);
  for (double& x : p) x = 0.05 + uniform01(rng);
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= z;
  return p;
}

// Two full-cache nodes around user 0 plus user 1 near node 1.
OwnedInstance pair_instance(std::size_t levels) {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0}), node_at(1, 120, 0, {0})},
                                {user_at(0, 60, 0, 0), user_at(1, 170, 0, 0)}, 100.0, 300.0, 1);
  inst.channel = deterministic_channel(inst.topology, 3.0);
  inst.grid = PowerGrid::uniform(levels, 2.0);
  inst.backlog = {6, 9};
  inst.V = 1.0;
  return inst;
}

TEST(Support, IndexingRoundTrips) {
  const OwnedInstance inst = pair_instance(2);
  const Topology& t = inst.topology;
  ASSERT_EQ(t.node_servable[1], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(support_size(t, 1, 2), 5u);
  for (std::size_t idx = 0; idx < support_size(t, 1, 2); ++idx) {
    EXPECT_EQ(support_index(t, 1, 2, support_decision(t, 1, 2, idx)), idx);
  }
  EXPECT_EQ(support_decision(t, 1, 2, 3), NodeDecision::serve(1, 1));
}

TEST(InitMessages, UniformOverSupport) {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0})},
                                {user_at(0, 10, 0, 0), user_at(1, 20, 0, 0), user_at(2, 30, 0, 0)},
                                100.0, 300.0, 1);
  for (MessageDomain domain : {MessageDomain::kLog, MessageDomain::kLinear}) {
    const BeliefTable t = init_messages(inst.topology, 2, domain);
    ASSERT_EQ(t.num_edges(), 3u);
    for (std::size_t e = 0; e < t.num_edges(); ++e) {
      ASSERT_EQ(t.to_user(e).size(), 7u);
      double sum = 0.0;
      for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_NEAR(t.to_user_probability(e, i), 1.0 / 7.0, 1e-15);
        sum += t.to_user_probability(e, i);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
  OwnedInstance single;
  single.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 10, 0, 0)}, 100.0, 300.0, 1);
  const BeliefTable t = init_messages(single.topology, 1);
  EXPECT_NEAR(t.to_user_probability(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(t.to_user_probability(0, 1), 0.5, 1e-15);
}

TEST(BeliefTable, EdgesAlignWithNeighborSets) {
  const OwnedInstance inst = pair_instance(2);
  const BeliefTable t(inst.topology, 2, MessageDomain::kLog);
  for (std::size_t m = 0; m < inst.topology.num_nodes(); ++m) {
    const auto edges = t.node_edges(m);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      EXPECT_EQ(t.edge_node(edges[k]), m);
      EXPECT_EQ(t.edge_user(edges[k]), inst.topology.node_users[m][k]);
      EXPECT_EQ(t.edge(m, inst.topology.node_users[m][k]), edges[k]);
    }
  }
  for (std::size_t n = 0; n < inst.topology.num_users(); ++n) {
    const auto edges = t.user_edges(n);
    for (std::size_t k = 0; k < edges.size(); ++k) EXPECT_EQ(t.edge_node(edges[k]), inst.topology.user_nodes[n][k]);
  }
}

TEST(FactorUpdate, LoneNeighborIsExactGibbs) {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 60, 0, 0)}, 100.0, 300.0, 1);
  inst.channel = deterministic_channel(inst.topology, 3.0);
  inst.grid = PowerGrid::uniform(2, 2.0);
  inst.backlog = {3};
  const double delta = 0.3;
  BeliefTable t = init_messages(inst.topology, 2);
  factor_update(inst.view(), delta, t, 0);
  std::vector<double> w;
  for (std::size_t idx = 0; idx < 3; ++idx) {
    ScheduleDecision d = {support_decision(inst.topology, 0, 2, idx)};
    w.push_back(std::exp(delta * per_user_utility(inst.view(), d, 0)));
  }
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t idx = 0; idx < 3; ++idx) EXPECT_NEAR(t.to_node_probability(0, idx), w[idx] / z, 1e-12);
}

// Brute-force message p_{n->m}(d_m) over full supports of the other neighbors.
std::vector<double> brute_force_factor_message(const SlotInstance& inst, const BeliefTable& t,
                                               double delta, std::size_t n, std::size_t m) {
  const Topology& topo = inst.topology;
  const std::size_t L = inst.grid.size();
  const auto& h = topo.user_nodes[n];
  std::vector<std::size_t> others;
  for (std::size_t k : h) {
    if (k != m) others.push_back(k);
  }
  std::vector<double> out(support_size(topo, m, L), 0.0);
  for (std::size_t own = 0; own < out.size(); ++own) {
    std::vector<std::size_t> digit(others.size(), 0);
    for (;;) {
      ScheduleDecision d = all_idle(topo.num_nodes());
      d[m] = support_decision(topo, m, L, own);
      double weight = 1.0;
      for (std::size_t a = 0; a < others.size(); ++a) {
        d[others[a]] = support_decision(topo, others[a], L, digit[a]);
        weight *= t.to_user_probability(t.edge(others[a], n), digit[a]);
      }
      out[own] += weight * std::exp(delta * per_user_utility(inst, d, n));
      std::size_t a = 0;
      for (; a < others.size(); ++a) {
        if (++digit[a] < support_size(topo, others[a], L)) break;
        digit[a] = 0;
      }
      if (a == others.size()) break;
    }
  }
  const double z = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& x : out) x /= z;
  return out;
}

TEST(FactorUpdate, TwoNeighborsMatchBruteForce) {
  Rng rng(31);
  for (MessageDomain domain : {MessageDomain::kLog, MessageDomain::kLinear}) {
    for (std::size_t levels : {1u, 2u}) {
      OwnedInstance inst = pair_instance(levels);
      inst.backlog = {2, 3};
      BeliefTable t = init_messages(inst.topology, levels, domain);
      for (std::size_t e = 0; e < t.num_edges(); ++e) {
        set_message(t, t.to_user(e), random_probabilities(t.to_user(e).size(), rng));
      }
      const double delta = 0.05;
      factor_update(inst.view(), delta, t, 0);
      for (std::size_t m : inst.topology.user_nodes[0]) {
        const auto expected = brute_force_factor_message(inst.view(), t, delta, 0, m);
        const auto& got = t.to_node(t.edge(m, 0));
        for (std::size_t idx = 0; idx < expected.size(); ++idx) {
          EXPECT_NEAR(message_probability(t, got, idx), expected[idx], 1e-9 * expected[idx]);
        }
      }
    }
  }
}

TEST(FactorUpdate, IdlePriorsGiveInterferenceFreeMessage) {
  OwnedInstance inst = pair_instance(1);
  inst.backlog = {4, 4};
  BeliefTable t = init_messages(inst.topology, 1);
  // Every node reports (almost surely) idle to user 0.
  for (std::size_t m : inst.topology.user_nodes[0]) {
    auto& msg = t.to_user(t.edge(m, 0));
    std::fill(msg.begin(), msg.end(), -1e4);
    msg[0] = 0.0;
  }
  const double delta = 0.2;
  factor_update(inst.view(), delta, t, 0);
  for (std::size_t m : inst.topology.user_nodes[0]) {
    std::vector<double> w;
    for (std::size_t idx = 0; idx < support_size(inst.topology, m, 1); ++idx) {
      ScheduleDecision d = all_idle(2);
      d[m] = support_decision(inst.topology, m, 1, idx);
      w.push_back(std::exp(delta * per_user_utility(inst.view(), d, 0)));
    }
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
      EXPECT_NEAR(t.to_node_probability(t.edge(m, 0), idx), w[idx] / z, 1e-12);
    }
  }
}

TEST(FactorUpdate, CapOverflowIsAnError) {
  OwnedInstance inst = pair_instance(2);
  BeliefTable t = init_messages(inst.topology, 2);
  EXPECT_THROW(factor_update(inst.view(), 1.0, t, 0, 2), InfeasibleError);
  BpConfig config;
  config.approx_neighbors = 0;
  config.enumeration_cap = 2;
  EXPECT_THROW(run_bp(inst.view(), config), InfeasibleError);
}

TEST(ApproxFactorUpdate, FullNeighborhoodEqualsExact) {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const OwnedInstance inst = testing::random_instance(rng, {2, 4, 2, 5, 2});
    for (MeanFieldRule rule : {MeanFieldRule::kExpectedPower, MeanFieldRule::kModalPower}) {
      BeliefTable a = init_messages(inst.topology, 2);
      for (std::size_t e = 0; e < a.num_edges(); ++e) {
        set_message(a, a.to_user(e), random_probabilities(a.to_user(e).size(), rng));
      }
      BeliefTable b = a;
      for (std::size_t n = 0; n < inst.topology.num_users(); ++n) {
        factor_update(inst.view(), 0.1, a, n);
        approx_factor_update(inst.view(), 0.1, b, n, inst.topology.user_nodes[n], rule);
      }
      for (std::size_t e = 0; e < a.num_edges(); ++e) ASSERT_EQ(a.to_node(e), b.to_node(e));
    }
  }
}

TEST(ApproxFactorUpdate, IdleFarNodeAddsNoInterference) {
  OwnedInstance inst = pair_instance(1);
  BeliefTable exact = init_messages(inst.topology, 1);
  auto& far = exact.to_user(exact.edge(1, 0));
  std::fill(far.begin(), far.end(), -1e4);
  far[0] = 0.0;
  BeliefTable approx = exact;
  factor_update(inst.view(), 0.2, exact, 0);
  const std::vector<std::size_t> only_node0 = {0};
  approx_factor_update(inst.view(), 0.2, approx, 0, only_node0, MeanFieldRule::kExpectedPower);
  const auto e = exact.edge(0, 0);
  for (std::size_t idx = 0; idx < exact.to_node(e).size(); ++idx) {
    EXPECT_NEAR(exact.to_node_probability(e, idx), approx.to_node_probability(e, idx), 1e-12);
  }
}

TEST(ApproxFactorUpdate, MeanFieldRulesReadInterferenceFromTheMessage) {
  // Node 1's message to user 0 favors serving user 1 at full power; the modal rule
  // charges that power, the expected rule charges its mean.
  OwnedInstance inst = pair_instance(1);
  inst.backlog = {50, 50};
  BeliefTable base = init_messages(inst.topology, 1);
  set_message(base, base.to_user(base.edge(1, 0)), {0.2, 0.1, 0.7});
  const std::vector<std::size_t> only_node0 = {0};
  const double delta = 1e-3;
  const double gain = inst.channel.gain(1, 0);
  for (MeanFieldRule rule : {MeanFieldRule::kExpectedPower, MeanFieldRule::kModalPower}) {
    BeliefTable t = base;
    approx_factor_update(inst.view(), delta, t, 0, only_node0, rule);
    const double interference = gain * (rule == MeanFieldRule::kModalPower ? 2.0 : 0.8 * 2.0);
    const double rate = shannon_rate(10e6, inst.channel.gain(0, 0) * 2.0, interference, 1e-8);
    const double f = 50.0 * static_cast<double>(std::min<Chunks>(chunk_capacity(rate, 0.01, 20e3), 50)) - 2.0;
    const double serve = std::exp(delta * f);
    const auto e = t.edge(0, 0);
    EXPECT_NEAR(t.to_node_probability(e, 1), serve / (1.0 + serve), 1e-12);
  }
}

TEST(MeanPower, TwoPointMean) {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 10, 0, 0)}, 100.0, 300.0, 1);
  const PowerGrid grid = PowerGrid::uniform(2, 2.0);
  const std::vector<double> p = {0.5, 0.5, 0.0};
  EXPECT_DOUBLE_EQ(mean_power(inst.topology, 0, grid, p), 0.5);
  const std::vector<double> idle = {1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(mean_power(inst.topology, 0, grid, idle), 0.0);
}

TEST(MeanFieldRule, ParsesNames) {
  EXPECT_EQ(parse_mean_field_rule("mode"), MeanFieldRule::kModalPower);
  EXPECT_EQ(parse_mean_field_rule("expected"), MeanFieldRule::kExpectedPower);
  EXPECT_EQ(to_string(MeanFieldRule::kModalPower), "mode");
  EXPECT_THROW(parse_mean_field_rule("median"), ConfigError);
}

TEST(NearestNeighbors, ClosestFirstThenSortedByIndex) {
  const Topology t = make_topology({node_at(0, 200, 0, {0}), node_at(1, 10, 0, {0}), node_at(2, 50, 0, {0})},
                                   {user_at(0, 0, 0, 0)}, 100.0, 300.0, 1);
  EXPECT_EQ(nearest_neighbors(t, 0, 1), (std::vector<std::size_t>{1}));
  EXPECT_EQ(nearest_neighbors(t, 0, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(nearest_neighbors(t, 0, 10), (std::vector<std::size_t>{0, 1, 2}));
}

// One node, three users so each outgoing message multiplies two incoming ones.
OwnedInstance star_instance() {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0})},
                                {user_at(0, 10, 0, 0), user_at(1, 20, 0, 0), user_at(2, 30, 0, 0)},
                                100.0, 300.0, 1);
  return inst;
}

TEST(VariableUpdate, SingleUserGivesUniform) {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 10, 0, 0)}, 100.0, 300.0, 1);
  BeliefTable t = init_messages(inst.topology, 2);
  set_message(t, t.to_node(0), {0.7, 0.2, 0.1});
  variable_update(t, 0);
  for (std::size_t idx = 0; idx < 3; ++idx) EXPECT_NEAR(t.to_user_probability(0, idx), 1.0 / 3.0, 1e-15);
}

TEST(VariableUpdate, IdenticalInputsSquare) {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 10, 0, 0), user_at(1, 20, 0, 0), user_at(2, 30, 0, 0)},
                                100.0, 300.0, 1);
  BeliefTable t = init_messages(inst.topology, 1);
  const std::vector<double> p = {0.2, 0.3, 0.1, 0.4};
  set_message(t, t.to_node(0), p);
  set_message(t, t.to_node(1), p);
  set_message(t, t.to_node(2), {0.25, 0.25, 0.25, 0.25});
  variable_update(t, 0);
  double z = 0.0;
  for (double x : p) z += x * x;
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    EXPECT_NEAR(t.to_user_probability(2, idx), p[idx] * p[idx] / z, 1e-12);
  }
}

TEST(VariableUpdate, DisjointInputsFallBackToUniform) {
  OwnedInstance inst = star_instance();
  BeliefTable t = init_messages(inst.topology, 1, MessageDomain::kLinear);
  set_message(t, t.to_node(0), {1.0, 0.0, 0.0, 0.0});
  set_message(t, t.to_node(1), {0.0, 1.0, 0.0, 0.0});
  set_message(t, t.to_node(2), {0.25, 0.25, 0.25, 0.25});
  variable_update(t, 0);
  EXPECT_EQ(t.underflow_fallbacks, 1u);
  for (std::size_t idx = 0; idx < 4; ++idx) EXPECT_DOUBLE_EQ(t.to_user_probability(2, idx), 0.25);
}

TEST(VariableUpdate, LogAndLinearAgree) {
  Rng rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    const OwnedInstance inst = testing::random_instance(rng, {2, 5, 2, 8, 2});
    BeliefTable lin = init_messages(inst.topology, 2, MessageDomain::kLinear);
    BeliefTable log = init_messages(inst.topology, 2, MessageDomain::kLog);
    for (std::size_t e = 0; e < lin.num_edges(); ++e) {
      const auto p = random_probabilities(lin.to_node(e).size(), rng);
      set_message(lin, lin.to_node(e), p);
      set_message(log, log.to_node(e), p);
    }
    for (std::size_t m = 0; m < inst.topology.num_nodes(); ++m) {
      variable_update(lin, m);
      variable_update(log, m);
    }
    for (std::size_t e = 0; e < lin.num_edges(); ++e) {
      for (std::size_t idx = 0; idx < lin.to_user(e).size(); ++idx) {
        ASSERT_NEAR(lin.to_user_probability(e, idx), log.to_user_probability(e, idx), 1e-9);
      }
    }
  }
}

TEST(RunBp, SingleEdgeIsExactGibbs) {
  OwnedInstance inst;
  inst.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 70, 0, 0)}, 100.0, 300.0, 1);
  inst.channel = deterministic_channel(inst.topology, 3.0);
  inst.grid = PowerGrid::uniform(4, 2.0);
  inst.backlog = {2};
  BpConfig config;
  config.temperature = 0.4;
  const Marginals marg = run_bp(inst.view(), config);
  const auto gibbs = testing::gibbs_marginals(inst.view(), 0.4);
  for (std::size_t idx = 0; idx < gibbs[0].size(); ++idx) EXPECT_NEAR(marg.prob(0, idx), gibbs[0][idx], 1e-12);
}

TEST(RunBp, TreeInstancesMatchBruteForce) {
  Rng rng(61);
  testing::RandomInstanceSpec spec{1, 3, 1, 3, 2};
  spec.side = 600.0;
  spec.max_backlog = 5;
  int checked = 0;
  while (checked < 40) {
    spec.levels = 1 + rng() % 2;
    const OwnedInstance inst = testing::random_instance(rng, spec);
    if (!testing::is_forest(inst.topology)) continue;
    BpConfig config;
    config.temperature = 0.01;
    const Marginals marg = run_bp(inst.view(), config);
    const auto gibbs = testing::gibbs_marginals(inst.view(), 0.01);
    for (std::size_t m = 0; m < gibbs.size(); ++m) {
      for (std::size_t idx = 0; idx < gibbs[m].size(); ++idx) ASSERT_NEAR(marg.prob(m, idx), gibbs[m][idx], 1e-6);
    }
    ++checked;
  }
}

TEST(RunBp, MarginalsAreNormalizedAndDeterministic) {
  Rng rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    const OwnedInstance inst = testing::random_instance(rng, {2, 5, 2, 8, 2});
    BpConfig config;
    config.approx_neighbors = trial % 2 == 0 ? 0 : 1;
    std::size_t calls = 0;
    config.observer = [&](std::size_t, const Marginals&) { ++calls; };
    const Marginals a = run_bp(inst.view(), config);
    EXPECT_EQ(calls, config.iterations);
    config.observer = nullptr;
    const Marginals b = run_bp(inst.view(), config);
    ASSERT_EQ(a.log_prob, b.log_prob);
    for (std::size_t m = 0; m < a.num_nodes(); ++m) {
      double sum = 0.0;
      for (std::size_t idx = 0; idx < a.log_prob[m].size(); ++idx) {
        ASSERT_TRUE(std::isfinite(a.log_prob[m][idx]) || a.log_prob[m][idx] < 0.0);
        sum += a.prob(m, idx);
      }
      ASSERT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(RunBp, LogAndLinearDomainsAgree) {
  Rng rng(81);
  for (int trial = 0; trial < 40; ++trial) {
    testing::RandomInstanceSpec spec{2, 4, 2, 5, 2};
    spec.max_backlog = 5;
    const OwnedInstance inst = testing::random_instance(rng, spec);
    BpConfig config;
    config.temperature = 0.01;
    config.domain = MessageDomain::kLog;
    const Marginals a = run_bp(inst.view(), config);
    config.domain = MessageDomain::kLinear;
    const Marginals b = run_bp(inst.view(), config);
    for (std::size_t m = 0; m < a.num_nodes(); ++m) {
      for (std::size_t idx = 0; idx < a.log_prob[m].size(); ++idx) ASSERT_NEAR(a.prob(m, idx), b.prob(m, idx), 1e-9);
    }
  }
}

TEST(RunBp, ConfigValidation) {
  BpConfig c;
  c.iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = BpConfig{};
  c.temperature = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Decide, Examples) {
  OwnedInstance two_users;
  two_users.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 10, 0, 0), user_at(1, 20, 0, 0)},
                                     100.0, 300.0, 1);
  EXPECT_EQ(decide(two_users.topology, testing::marginals_from(1, {{0.5, 0.3, 0.2}}))[0], NodeDecision::idle());

  OwnedInstance one_user;
  one_user.topology = make_topology({node_at(0, 0, 0, {0})}, {user_at(0, 10, 0, 0)}, 100.0, 300.0, 1);
  EXPECT_EQ(decide(one_user.topology, testing::marginals_from(2, {{0.2, 0.5, 0.3}}))[0], NodeDecision::serve(0, 1));
  EXPECT_EQ(decide(one_user.topology, testing::marginals_from(2, {{0.4, 0.4, 0.2}}))[0], NodeDecision::idle());
}

TEST(Decide, MayAssignOneUserToSeveralNodes) {
  const OwnedInstance inst = pair_instance(1);
  // Both nodes put most mass on serving user 0.
  const Marginals m = testing::marginals_from(1, {{0.1, 0.9}, {0.1, 0.8, 0.1}});
  const ScheduleDecision d = decide(inst.topology, m);
  EXPECT_EQ(testing::many_to_one_conflicts(inst.topology, d), 1u);
  EXPECT_EQ(check_decision(inst.topology, inst.grid, d), "");
}

TEST(MarginalsJson, ListsEveryDecision) {
  const OwnedInstance inst = pair_instance(1);
  const std::string json = marginals_to_json(inst.topology, testing::marginals_from(1, {{0.5, 0.5}, {0.2, 0.3, 0.5}}));
  EXPECT_NE(json.find("\"idle\""), std::string::npos);
  EXPECT_EQ(std::count(json.begin(), json.end(), 'p') >= 3, true);
}

}  // namespace
}  // namespace cachesched
