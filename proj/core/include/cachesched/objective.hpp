// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cachesched/channel.hpp"
#include "cachesched/queueing.hpp"
#include "cachesched/topology.hpp"

namespace cachesched {

/// Discrete transmit power levels P_1 < ... < P_L (watts). Level indices are 1-based;
/// level 0 means idle (zero power).
struct PowerGrid {
  std::vector<double> levels;
  double q_max = 2.0;

  /// P_l = l * q_max / L.
  static PowerGrid uniform(std::size_t num_levels, double q_max);

  std::size_t size() const noexcept { return levels.size(); }
  double power(std::size_t level) const noexcept { return level == 0 ? 0.0 : levels[level - 1]; }
  void validate() const;
};

/// A caching node's per-slot choice: idle, or serve one user at one power level.
class NodeDecision {
 public:
  constexpr NodeDecision() = default;
  static constexpr NodeDecision idle() noexcept { return {}; }
  static constexpr NodeDecision serve(std::size_t user, std::size_t level) noexcept {
    return NodeDecision(user, level);
  }

  constexpr bool is_idle() const noexcept { return level_ == 0; }
  constexpr std::size_t user() const noexcept { return user_; }
  constexpr std::size_t level() const noexcept { return level_; }
  constexpr bool serves(std::size_t n) const noexcept { return level_ != 0 && user_ == n; }

  friend constexpr bool operator==(const NodeDecision&, const NodeDecision&) = default;

 private:
  constexpr NodeDecision(std::size_t user, std::size_t level) noexcept
      : user_(user), level_(level) {}
  std::size_t user_ = 0;
  std::size_t level_ = 0;
};

/// One decision per caching node (indexed like Topology::nodes).
using ScheduleDecision = std::vector<NodeDecision>;

ScheduleDecision all_idle(std::size_t nodes);

/// Empty string if every serving node targets a user in its V_m at a valid level.
std::string check_decision(const Topology& topo, const PowerGrid& grid,
                           const ScheduleDecision& decision);

/// "m:n:l" entries joined by ';' for serving nodes (used in metrics CSV).
std::string encode_decision(const ScheduleDecision& decision);
ScheduleDecision decode_decision(const std::string& text, std::size_t nodes);

/// Optional orthogonal-band partition. A node only interferes with users in its own band.
struct BandPlan {
  std::vector<int> node_band;
  std::vector<int> user_band;
};

/// Physical constants that turn SINR into served chunks.
struct LinkModel {
  double bandwidth_hz = 10e6;
  double noise_power = 1e-8;
  double slot_seconds = 0.01;
  double chunk_bits = 20e3;
  const BandPlan* bands = nullptr;  // nullptr: one shared band
};

/// Everything the per-slot objective depends on. Non-owning.
struct SlotInstance {
  const Topology& topology;
  const ChannelRealization& channel;
  const PowerGrid& grid;
  LinkModel link;
  std::span<const Chunks> backlog;
  double V = 1.0;
};

/// Rate of user n (bits/s). The signal is the sum over serving nodes in J_n;
/// interference counts every node in H_n that serves some other user. Two or more
/// simultaneous servers of n give rate 0.
double user_rate(const SlotInstance& inst, const ScheduleDecision& decision, std::size_t n);

/// B * log2(1 + signal / (interference + noise)).
double shannon_rate(double bandwidth_hz, double signal, double interference, double noise) noexcept;

/// mu_n under `decision` (departures() applied to user_rate).
Chunks served_chunks(const SlotInstance& inst, const ScheduleDecision& decision, std::size_t n);

/// f_n = Q_n * mu_n - V * sum_{m in H_n} q_m x_mn, multiplied by the one-server
/// indicator: f_n = 0 whenever two or more nodes serve n.
double per_user_utility(const SlotInstance& inst, const ScheduleDecision& decision,
                        std::size_t n);

/// F = sum_n f_n, the per-slot drift-plus-penalty utility every scheduler maximizes.
double global_utility(const SlotInstance& inst, const ScheduleDecision& decision);

/// Total transmit power of serving nodes.
double total_power(const PowerGrid& grid, const ScheduleDecision& decision) noexcept;

std::size_t active_links(const ScheduleDecision& decision) noexcept;

}  // namespace cachesched
