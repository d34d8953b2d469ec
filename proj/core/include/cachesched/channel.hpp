// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cachesched/topology.hpp"

namespace cachesched {

/// 1 / d^alpha. Throws DomainError for d <= 0 or alpha <= 0.
double path_gain(double distance, double alpha);

/// Squared channel gains |h_mn|^2 for one slot of a block-fading channel.
/// Entries exist for neighboring pairs only; gain() of a non-neighbor is 0.
class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(std::uint64_t slot, std::size_t nodes, std::size_t users);

  std::uint64_t slot() const noexcept { return slot_; }
  std::size_t num_nodes() const noexcept { return nodes_; }
  std::size_t num_users() const noexcept { return users_; }

  double gain(std::size_t m, std::size_t n) const noexcept { return gains_[m * users_ + n]; }
  void set_gain(std::size_t m, std::size_t n, double g) noexcept { gains_[m * users_ + n] = g; }

  /// Channel of a restricted topology (sub index -> parent index maps).
  ChannelRealization restricted(const std::vector<std::size_t>& node_map,
                                const std::vector<std::size_t>& user_map) const;

 private:
  std::uint64_t slot_ = 0;
  std::size_t nodes_ = 0;
  std::size_t users_ = 0;
  std::vector<double> gains_;
};

/// Rayleigh block fading: |h_mn|^2 = path_gain(d_mn, alpha) * E with E ~ Exp(1).
/// Each pair draws from its own counter-based stream keyed by
/// (seed, node id, user id, slot), so results do not depend on evaluation order.
ChannelRealization sample_channel(const Topology& topo, double alpha, std::uint64_t seed,
                                  std::uint64_t slot);

/// Unit-mean exponential variate of the pair stream (exposed for statistical tests).
double fading_power(std::uint64_t seed, std::size_t node_id, std::size_t user_id,
                    std::uint64_t slot) noexcept;

/// Debug dump: one row per neighboring pair.
void write_channel_csv(std::ostream& out, const Topology& topo, const ChannelRealization& ch);

}  // namespace cachesched
