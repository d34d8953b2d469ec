// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cachesched/errors.hpp"

namespace cachesched {

std::size_t search_space_size(const Topology& topo, std::size_t levels) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 1;
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    const std::size_t s = support_size(topo, m, levels);
    if (total > kMax / s) return kMax;
    total *= s;
  }
  return total;
}

ScheduleDecision exhaustive_search(const SlotInstance& inst, std::size_t cap) {
  const Topology& topo = inst.topology;
  const std::size_t L = inst.grid.size();
  const std::size_t space = search_space_size(topo, L);
  if (space > cap) {
    throw InfeasibleError("exhaustive search space of " + std::to_string(space) +
                          " decisions exceeds the cap of " + std::to_string(cap));
  }
  const std::size_t M = topo.num_nodes();
  std::vector<std::size_t> digit(M, 0);
  ScheduleDecision current = all_idle(M);
  ScheduleDecision best = current;
  double best_f = global_utility(inst, current);
  for (std::size_t visited = 1; visited < space; ++visited) {
    // Odometer with the last node fastest gives lexicographic order.
    for (std::size_t a = M; a-- > 0;) {
      if (++digit[a] < support_size(topo, a, L)) {
        current[a] = support_decision(topo, a, L, digit[a]);
        break;
      }
      digit[a] = 0;
      current[a] = NodeDecision::idle();
    }
    const double f = global_utility(inst, current);
    if (f > best_f) {
      best_f = f;
      best = current;
    }
  }
  return best;
}

std::size_t ClusterGrid::cell_of(Point p) const noexcept {
  auto axis = [&](double v, double o, std::size_t count) {
    const double k = std::floor((v - o) / cell_side);
    if (!(k > 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(k), count - 1);
  };
  return axis(p.y, origin.y, rows) * cols + axis(p.x, origin.x, cols);
}

ClusterGrid ClusterGrid::covering(double side, std::size_t per_axis, Point origin) {
  if (per_axis == 0 || !(side > 0.0)) throw ConfigError("cluster grid needs cells");
  ClusterGrid g;
  g.origin = origin;
  g.cell_side = side / static_cast<double>(per_axis);
  g.rows = per_axis;
  g.cols = per_axis;
  return g;
}

ClusterPlan make_cluster_plan(const Topology& topo, const ClusterGrid& grid) {
  ClusterPlan plan;
  plan.clusters = grid.size();
  for (const auto& c : topo.nodes) {
    plan.bands.node_band.push_back(static_cast<int>(grid.cell_of(c.position)));
  }
  for (const auto& u : topo.users) {
    plan.bands.user_band.push_back(static_cast<int>(grid.cell_of(u.position)));
  }
  return plan;
}

LinkModel cluster_link(const LinkModel& full_band, const ClusterPlan& plan) {
  LinkModel link = full_band;
  link.bandwidth_hz = full_band.bandwidth_hz / static_cast<double>(plan.clusters);
  link.bands = &plan.bands;
  return link;
}

ScheduleDecision clustering_schedule_1(const SlotInstance& inst, const ClusterPlan& plan) {
  const Topology& topo = inst.topology;
  const LinkModel link = cluster_link(inst.link, plan);
  struct Best {
    double utility = 0.0;
    std::size_t node = 0;
    NodeDecision decision;
  };
  std::vector<Best> best(plan.clusters);
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    const std::size_t c = plan.node_cluster(m);
    for (std::size_t n : topo.node_servable[m]) {
      if (plan.user_cluster(n) != c) continue;
      for (std::size_t l = 1; l <= inst.grid.size(); ++l) {
        const double q = inst.grid.power(l);
        const double rate =
            shannon_rate(link.bandwidth_hz, inst.channel.gain(m, n) * q, 0.0, link.noise_power);
        const Chunks mu =
            std::min(chunk_capacity(rate, link.slot_seconds, link.chunk_bits), inst.backlog[n]);
        const double f = static_cast<double>(inst.backlog[n]) * static_cast<double>(mu) - inst.V * q;
        if (f > best[c].utility) best[c] = Best{f, m, NodeDecision::serve(n, l)};
      }
    }
  }
  ScheduleDecision out = all_idle(topo.num_nodes());
  for (const Best& b : best) {
    if (!b.decision.is_idle()) out[b.node] = b.decision;
  }
  return out;
}

ScheduleDecision clustering_schedule_2(const SlotInstance& inst, const ClusterPlan& plan,
                                       const BpConfig& bp, const LinkScheduleOptions& matching) {
  const Topology& topo = inst.topology;
  LinkModel link = inst.link;
  link.bandwidth_hz /= static_cast<double>(plan.clusters);
  link.bands = nullptr;  // a cluster sub-topology is a single band
  ScheduleDecision out = all_idle(topo.num_nodes());
  for (std::size_t c = 0; c < plan.clusters; ++c) {
    std::vector<bool> keep_node(topo.num_nodes()), keep_user(topo.num_users());
    bool any = false;
    for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
      keep_node[m] = plan.node_cluster(m) == c;
      any = any || keep_node[m];
    }
    for (std::size_t n = 0; n < topo.num_users(); ++n) keep_user[n] = plan.user_cluster(n) == c;
    if (!any) continue;
    const Restriction sub = restrict_topology(topo, keep_node, keep_user);
    if (sub.topology.num_nodes() == 0) continue;
    const ChannelRealization channel = inst.channel.restricted(sub.node_map, sub.user_map);
    std::vector<Chunks> backlog;
    backlog.reserve(sub.user_map.size());
    for (std::size_t n : sub.user_map) backlog.push_back(inst.backlog[n]);
    const SlotInstance local{sub.topology, channel, inst.grid, link, backlog, inst.V};
    const Marginals marginals = run_bp(local, bp);
    const LinkScheduleResult r = link_schedule(local, marginals, matching);
    for (std::size_t m = 0; m < r.decision.size(); ++m) {
      const NodeDecision& d = r.decision[m];
      if (!d.is_idle()) out[sub.node_map[m]] = NodeDecision::serve(sub.user_map[d.user()], d.level());
    }
  }
  return out;
}

}  // namespace cachesched
