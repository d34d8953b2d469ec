// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/channel.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "cachesched/errors.hpp"
#include "cachesched/random.hpp"

namespace cachesched {

double path_gain(double distance, double alpha) {
  if (!(distance > 0.0)) {
    throw DomainError("path gain undefined for distance " + std::to_string(distance));
  }
  if (!(alpha > 0.0)) throw DomainError("path loss exponent must be positive");
  return std::pow(distance, -alpha);
}

ChannelRealization::ChannelRealization(std::uint64_t slot, std::size_t nodes, std::size_t users)
    : slot_(slot), nodes_(nodes), users_(users), gains_(nodes * users, 0.0) {}

ChannelRealization ChannelRealization::restricted(const std::vector<std::size_t>& node_map,
                                                  const std::vector<std::size_t>& user_map) const {
  ChannelRealization sub(slot_, node_map.size(), user_map.size());
  for (std::size_t m = 0; m < node_map.size(); ++m) {
    for (std::size_t n = 0; n < user_map.size(); ++n) {
      sub.set_gain(m, n, gain(node_map[m], user_map[n]));
    }
  }
  return sub;
}

double fading_power(std::uint64_t seed, std::size_t node_id, std::size_t user_id,
                    std::uint64_t slot) noexcept {
  const std::uint64_t key = mix_seed({seed, tag(StreamTag::kChannel), node_id, user_id, slot});
  // |g|^2 for g ~ CN(0,1) is Exp(1); 1 - u lies in (0, 1].
  return -std::log1p(-hashed_uniform01(key));
}

ChannelRealization sample_channel(const Topology& topo, double alpha, std::uint64_t seed,
                                  std::uint64_t slot) {
  ChannelRealization ch(slot, topo.num_nodes(), topo.num_users());
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    for (std::size_t n : topo.node_users[m]) {
      const double g = path_gain(topo.distance(m, n), alpha);
      ch.set_gain(m, n, g * fading_power(seed, topo.nodes[m].id, topo.users[n].id, slot));
    }
  }
  return ch;
}

void write_channel_csv(std::ostream& out, const Topology& topo, const ChannelRealization& ch) {
  out << "slot,node,user,distance_m,gain\n";
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    for (std::size_t n : topo.node_users[m]) {
      out << ch.slot() << ',' << m << ',' << n << ',' << topo.distance(m, n) << ','
          << ch.gain(m, n) << '\n';
    }
  }
}

}  // namespace cachesched
