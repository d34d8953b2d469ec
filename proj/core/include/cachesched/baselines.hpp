// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "cachesched/bp.hpp"
#include "cachesched/matching.hpp"

namespace cachesched {

/// Number of joint decisions prod_m (L*|V_m| + 1), saturating at SIZE_MAX.
std::size_t search_space_size(const Topology& topo, std::size_t levels);

/// Globally F-maximal decision. Candidates are visited in lexicographic order (node
/// index, then idle before serve, then user, then level) and the first maximum wins.
/// Throws InfeasibleError when the search space exceeds `cap`.
ScheduleDecision exhaustive_search(const SlotInstance& inst, std::size_t cap = 10'000'000);

/// rows x cols square cells of side `cell_side` starting at `origin`. Points are
/// assigned by floor((p - origin) / cell_side), clamped to the grid.
struct ClusterGrid {
  Point origin{};
  double cell_side = 200.0;
  std::size_t rows = 3;
  std::size_t cols = 3;

  std::size_t size() const noexcept { return rows * cols; }
  std::size_t cell_of(Point p) const noexcept;
  /// rows x cols cells covering a square of side `side`.
  static ClusterGrid covering(double side, std::size_t per_axis, Point origin = {});
};

/// Cluster of every node and user; each cluster gets its own orthogonal band.
struct ClusterPlan {
  std::size_t clusters = 0;
  BandPlan bands;

  std::size_t node_cluster(std::size_t m) const { return static_cast<std::size_t>(bands.node_band[m]); }
  std::size_t user_cluster(std::size_t n) const { return static_cast<std::size_t>(bands.user_band[n]); }
};

ClusterPlan make_cluster_plan(const Topology& topo, const ClusterGrid& grid);

/// Link model of one cluster's band: bandwidth B / clusters, interference only
/// from nodes in the same cluster as the user.
LinkModel cluster_link(const LinkModel& full_band, const ClusterPlan& plan);

/// At most one active link per cluster: the intra-cluster (node, user, level) with
/// the largest positive drift-plus-penalty at bandwidth B / clusters, else idle.
/// `inst.link` is the full-band model.
ScheduleDecision clustering_schedule_1(const SlotInstance& inst, const ClusterPlan& plan);

/// BP plus link scheduling run separately on every cluster's sub-topology at
/// bandwidth B / clusters; the union of the cluster decisions.
ScheduleDecision clustering_schedule_2(const SlotInstance& inst, const ClusterPlan& plan,
                                       const BpConfig& bp, const LinkScheduleOptions& matching = {});

}  // namespace cachesched
