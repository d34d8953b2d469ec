// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

// Small-instance builders and brute-force oracles shared by unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "cachesched/baselines.hpp"
#include "cachesched/bp.hpp"
#include "cachesched/matching.hpp"
#include "cachesched/random.hpp"

namespace cachesched::testing {

/// Owns everything a SlotInstance points at.
struct OwnedInstance {
  Topology topology;
  ChannelRealization channel;
  PowerGrid grid;
  LinkModel link;
  std::vector<Chunks> backlog;
  double V = 1.0;

  SlotInstance view() const { return SlotInstance{topology, channel, grid, link, backlog, V}; }
};

inline CachingNode node_at(std::size_t id, double x, double y, std::vector<FileId> cache) {
  return CachingNode{id, Point{x, y}, std::move(cache)};
}

inline User user_at(std::size_t id, double x, double y, FileId file) {
  return User{id, Point{x, y}, file};
}

/// Channel with every neighboring pair at its path gain times `fading`.
inline ChannelRealization deterministic_channel(const Topology& topo, double alpha,
                                                double fading = 1.0) {
  ChannelRealization ch(0, topo.num_nodes(), topo.num_users());
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    for (std::size_t n : topo.node_users[m]) {
      ch.set_gain(m, n, path_gain(topo.distance(m, n), alpha) * fading);
    }
  }
  return ch;
}

struct RandomInstanceSpec {
  std::size_t min_nodes = 2, max_nodes = 6;
  std::size_t min_users = 2, max_users = 10;
  std::size_t levels = 2;
  double side = 250.0;         // square the points are dropped in
  std::size_t file_count = 4;  // small library so caches overlap
  std::size_t cache_capacity = 2;
  Chunks max_backlog = 40;
  double V = 1.0;
  double bandwidth_hz = 10e6;
};

inline std::size_t draw_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

/// Random pruned instance whose node and user counts fall inside the requested ranges.
inline OwnedInstance random_instance(Rng& rng, const RandomInstanceSpec& spec) {
  for (;;) {
    const std::size_t M = draw_between(rng, spec.min_nodes, spec.max_nodes);
    const std::size_t N = draw_between(rng, spec.min_users, spec.max_users);
    std::vector<CachingNode> nodes;
    std::vector<User> users;
    for (std::size_t m = 0; m < M; ++m) {
      std::vector<FileId> files(spec.file_count);
      std::iota(files.begin(), files.end(), FileId{0});
      std::shuffle(files.begin(), files.end(), rng);
      files.resize(spec.cache_capacity);
      std::sort(files.begin(), files.end());
      nodes.push_back(node_at(m, uniform01(rng) * spec.side, uniform01(rng) * spec.side, files));
    }
    for (std::size_t n = 0; n < N; ++n) {
      users.push_back(user_at(n, uniform01(rng) * spec.side, uniform01(rng) * spec.side,
                              static_cast<FileId>(rng() % spec.file_count)));
    }
    Topology topo = prune(make_topology(nodes, users, 100.0, 300.0, spec.file_count));
    if (topo.num_nodes() < spec.min_nodes || topo.num_users() < spec.min_users) continue;
    OwnedInstance inst;
    inst.topology = std::move(topo);
    inst.channel = sample_channel(inst.topology, 3.0, rng(), 0);
    inst.grid = PowerGrid::uniform(spec.levels, 2.0);
    inst.link.bandwidth_hz = spec.bandwidth_hz;
    inst.V = spec.V;
    for (std::size_t n = 0; n < inst.topology.num_users(); ++n) {
      inst.backlog.push_back(static_cast<Chunks>(rng() % static_cast<std::uint64_t>(spec.max_backlog + 1)));
    }
    return inst;
  }
}

/// Each node idles or serves a random user of V_m at a random level, independently.
/// Several nodes may pick the same user.
inline ScheduleDecision random_decision(const Topology& topo, std::size_t levels, Rng& rng) {
  ScheduleDecision d = all_idle(topo.num_nodes());
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    if (rng() % 2 == 0) continue;
    const auto& vm = topo.node_servable[m];
    d[m] = NodeDecision::serve(vm[rng() % vm.size()], 1 + rng() % levels);
  }
  return d;
}

/// True iff the node-user factor graph (edges n in U_m) has no cycle.
inline bool is_forest(const Topology& topo) {
  const std::size_t M = topo.num_nodes();
  std::vector<std::size_t> parent(M + topo.num_users());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n : topo.node_users[m]) {
      const std::size_t a = find(m), b = find(M + n);
      if (a == b) return false;
      parent[a] = b;
    }
  }
  return true;
}

/// Calls visit(decision) for every joint decision in lexicographic order.
template <typename Visit>
void for_each_decision(const Topology& topo, std::size_t levels, Visit&& visit) {
  const std::size_t M = topo.num_nodes();
  std::vector<std::size_t> digit(M, 0);
  ScheduleDecision d = all_idle(M);
  for (;;) {
    visit(static_cast<const ScheduleDecision&>(d));
    std::size_t a = M;
    for (; a-- > 0;) {
      if (++digit[a] < support_size(topo, a, levels)) {
        d[a] = support_decision(topo, a, levels, digit[a]);
        break;
      }
      digit[a] = 0;
      d[a] = NodeDecision::idle();
    }
    if (a == static_cast<std::size_t>(-1)) return;
  }
}

/// Exact marginals of p(d) proportional to exp(temperature * F(d)), by enumeration.
inline std::vector<std::vector<double>> gibbs_marginals(const SlotInstance& inst,
                                                        double temperature) {
  const Topology& topo = inst.topology;
  const std::size_t L = inst.grid.size();
  std::vector<std::pair<ScheduleDecision, double>> all;
  double top = -std::numeric_limits<double>::infinity();
  for_each_decision(topo, L, [&](const ScheduleDecision& d) {
    const double e = temperature * global_utility(inst, d);
    top = std::max(top, e);
    all.emplace_back(d, e);
  });
  std::vector<std::vector<double>> out(topo.num_nodes());
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) out[m].assign(support_size(topo, m, L), 0.0);
  double z = 0.0;
  for (const auto& [d, e] : all) {
    const double w = std::exp(e - top);
    z += w;
    for (std::size_t m = 0; m < topo.num_nodes(); ++m) out[m][support_index(topo, m, L, d[m])] += w;
  }
  for (auto& row : out) {
    for (double& p : row) p /= z;
  }
  return out;
}

/// Largest F over all joint decisions (independent of exhaustive_search).
inline double brute_force_max(const SlotInstance& inst) {
  double best = -std::numeric_limits<double>::infinity();
  for_each_decision(inst.topology, inst.grid.size(),
                    [&](const ScheduleDecision& d) { best = std::max(best, global_utility(inst, d)); });
  return best;
}

/// Random normalized marginals; `idle_bias` scales the idle entry's raw weight.
inline Marginals random_marginals(const Topology& topo, std::size_t levels, Rng& rng,
                                  double idle_bias = 1.0) {
  Marginals out;
  out.levels = levels;
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    std::vector<double> w(support_size(topo, m, levels));
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = -std::log(1.0 - uniform01(rng)) * (i == 0 ? idle_bias : 1.0);
      total += w[i];
    }
    for (double& x : w) x = std::log(x / total);
    out.log_prob.push_back(std::move(w));
  }
  return out;
}

/// Marginals built from explicit probabilities, one row per node.
inline Marginals marginals_from(std::size_t levels, const std::vector<std::vector<double>>& probs) {
  Marginals out;
  out.levels = levels;
  for (const auto& row : probs) {
    std::vector<double> lp;
    for (double p : row) lp.push_back(std::log(p));
    out.log_prob.push_back(std::move(lp));
  }
  return out;
}

/// Number of users with two or more serving nodes.
inline std::size_t many_to_one_conflicts(const Topology& topo, const ScheduleDecision& d) {
  std::vector<std::size_t> servers(topo.num_users(), 0);
  for (const NodeDecision& x : d) {
    if (!x.is_idle()) ++servers[x.user()];
  }
  return static_cast<std::size_t>(
      std::count_if(servers.begin(), servers.end(), [](std::size_t s) { return s > 1; }));
}

}  // namespace cachesched::testing
