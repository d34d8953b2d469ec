// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/objective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cachesched/errors.hpp"

namespace cachesched {

PowerGrid PowerGrid::uniform(std::size_t num_levels, double q_max) {
  if (num_levels == 0) throw ConfigError("need at least one power level");
  if (!(q_max > 0.0)) throw ConfigError("q_max must be positive");
  PowerGrid g;
  g.q_max = q_max;
  for (std::size_t l = 1; l <= num_levels; ++l) {
    g.levels.push_back(static_cast<double>(l) * q_max / static_cast<double>(num_levels));
  }
  return g;
}

void PowerGrid::validate() const {
  if (levels.empty()) throw ConfigError("need at least one power level");
  if (!(levels.front() > 0.0)) throw ConfigError("power levels must be positive");
  for (std::size_t l = 1; l < levels.size(); ++l) {
    if (!(levels[l] > levels[l - 1])) throw ConfigError("power levels must be increasing");
  }
  if (levels.back() > q_max) throw ConfigError("power level exceeds q_max");
}

ScheduleDecision all_idle(std::size_t nodes) { return ScheduleDecision(nodes); }

std::string check_decision(const Topology& topo, const PowerGrid& grid,
                           const ScheduleDecision& decision) {
  if (decision.size() != topo.num_nodes()) return "decision size differs from node count";
  for (std::size_t m = 0; m < decision.size(); ++m) {
    const NodeDecision& d = decision[m];
    if (d.is_idle()) continue;
    if (d.level() > grid.size()) return "node " + std::to_string(m) + " uses unknown level";
    if (!topo.can_serve(m, d.user())) {
      return "node " + std::to_string(m) + " serves user " + std::to_string(d.user()) +
             " outside V_m";
    }
  }
  return {};
}

std::string encode_decision(const ScheduleDecision& decision) {
  std::ostringstream out;
  bool first = true;
  for (std::size_t m = 0; m < decision.size(); ++m) {
    if (decision[m].is_idle()) continue;
    if (!first) out << ';';
    first = false;
    out << m << ':' << decision[m].user() << ':' << decision[m].level();
  }
  return out.str();
}

ScheduleDecision decode_decision(const std::string& text, std::size_t nodes) {
  ScheduleDecision d = all_idle(nodes);
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.empty()) continue;
    std::size_t m = 0, n = 0, l = 0;
    char c1 = 0, c2 = 0;
    std::istringstream fields(item);
    if (!(fields >> m >> c1 >> n >> c2 >> l) || c1 != ':' || c2 != ':' || m >= nodes || l == 0) {
      throw ConfigError("malformed decision entry '" + item + "'");
    }
    d[m] = NodeDecision::serve(n, l);
  }
  return d;
}

double shannon_rate(double bandwidth_hz, double signal, double interference,
                    double noise) noexcept {
  if (!(signal > 0.0)) return 0.0;
  return bandwidth_hz * std::log2(1.0 + signal / (interference + noise));
}

namespace {

bool same_band(const LinkModel& link, std::size_t m, std::size_t n) noexcept {
  return link.bands == nullptr || link.bands->node_band[m] == link.bands->user_band[n];
}

struct UserLinkState {
  double signal = 0.0;
  double interference = 0.0;
  double serving_power = 0.0;
  std::size_t servers = 0;
};

UserLinkState link_state(const SlotInstance& inst, const ScheduleDecision& decision,
                         std::size_t n) {
  UserLinkState s;
  for (std::size_t m : inst.topology.user_nodes[n]) {
    const NodeDecision& d = decision[m];
    if (d.is_idle()) continue;
    const double q = inst.grid.power(d.level());
    const double received = inst.channel.gain(m, n) * q;
    if (d.user() == n) {
      s.signal += received;
      s.serving_power += q;
      ++s.servers;
    } else if (same_band(inst.link, m, n)) {
      s.interference += received;
    }
  }
  return s;
}

}  // namespace

double user_rate(const SlotInstance& inst, const ScheduleDecision& decision, std::size_t n) {
  const UserLinkState s = link_state(inst, decision, n);
  if (s.servers != 1) return 0.0;
  return shannon_rate(inst.link.bandwidth_hz, s.signal, s.interference, inst.link.noise_power);
}

Chunks served_chunks(const SlotInstance& inst, const ScheduleDecision& decision, std::size_t n) {
  const double rate = user_rate(inst, decision, n);
  return std::min(chunk_capacity(rate, inst.link.slot_seconds, inst.link.chunk_bits),
                  inst.backlog[n]);
}

double per_user_utility(const SlotInstance& inst, const ScheduleDecision& decision,
                        std::size_t n) {
  const UserLinkState s = link_state(inst, decision, n);
  if (s.servers == 0) return 0.0;
  if (s.servers > 1) return 0.0;  // one-server indicator
  const double rate =
      shannon_rate(inst.link.bandwidth_hz, s.signal, s.interference, inst.link.noise_power);
  const Chunks mu =
      std::min(chunk_capacity(rate, inst.link.slot_seconds, inst.link.chunk_bits), inst.backlog[n]);
  return static_cast<double>(inst.backlog[n]) * static_cast<double>(mu) - inst.V * s.serving_power;
}

double global_utility(const SlotInstance& inst, const ScheduleDecision& decision) {
  double total = 0.0;
  for (std::size_t n = 0; n < inst.topology.num_users(); ++n) {
    total += per_user_utility(inst, decision, n);
  }
  return total;
}

double total_power(const PowerGrid& grid, const ScheduleDecision& decision) noexcept {
  double p = 0.0;
  for (const auto& d : decision) p += grid.power(d.level());
  return p;
}

std::size_t active_links(const ScheduleDecision& decision) noexcept {
  return static_cast<std::size_t>(
      std::count_if(decision.begin(), decision.end(), [](const NodeDecision& d) {
        return !d.is_idle();
      }));
}

}  // namespace cachesched
