// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cachesched/random.hpp"

namespace cachesched {

using FileId = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b) noexcept;

/// Axis-aligned square [origin.x, origin.x + side] x [origin.y, origin.y + side].
struct SquareRegion {
  double side = 0.0;
  Point origin{};

  double area() const noexcept { return side * side; }
};

/// Union of equal-radius disks. Sampled by thinning a PPP on the bounding box,
/// which yields a PPP of the same intensity restricted to the union.
struct DiskUnionRegion {
  std::vector<Point> centers;
  double radius = 0.0;

  bool contains(Point p) const noexcept;
  SquareRegion bounding_square() const;
};

using Region = std::variant<SquareRegion, DiskUnionRegion>;

/// Content library with Zipf popularity over files 0..file_count-1 (file 0 most popular).
struct Library {
  std::size_t file_count = 100;
  double zipf_exponent = 0.8;
  std::size_t cache_capacity = 10;
  std::vector<double> popularity;

  static Library zipf(std::size_t file_count, double exponent, std::size_t cache_capacity);
  FileId sample_request(Rng& rng) const;
};

enum class PlacementKind { kPopularityWeighted, kUniform, kExplicit };

struct PlacementPolicy {
  PlacementKind kind = PlacementKind::kPopularityWeighted;
  /// Used by kExplicit: node id -> cached files. Nodes absent from the map cache nothing.
  std::map<std::size_t, std::vector<FileId>> explicit_caches;
};

PlacementKind parse_placement_kind(const std::string& name);
std::string to_string(PlacementKind kind);

struct CachingNode {
  std::size_t id = 0;  // stable across pruning; seeds per-pair channel streams
  Point position{};
  std::vector<FileId> cache;  // sorted, distinct

  bool caches(FileId f) const noexcept;
};

struct User {
  std::size_t id = 0;
  Point position{};
  FileId requested_file = 0;
};

/// Caching nodes, users and the bipartite signal/interference relations.
///
/// Neighbor sets hold dense indices into `nodes` / `users`, sorted ascending:
///   node_users[m]   users within d_i of node m
///   node_servable[m] users within d_s of m whose file m caches  (subset of node_users)
///   user_nodes[n]   nodes within d_i of user n
///   user_servers[n] nodes within d_s of n caching n's file      (subset of user_nodes)
/// Distances exactly equal to d_s or d_i count as inside.
struct Topology {
  std::vector<CachingNode> nodes;
  std::vector<User> users;
  double d_s = 100.0;
  double d_i = 300.0;
  std::size_t file_count = 0;

  std::vector<std::vector<std::size_t>> node_users;
  std::vector<std::vector<std::size_t>> node_servable;
  std::vector<std::vector<std::size_t>> user_nodes;
  std::vector<std::vector<std::size_t>> user_servers;

  std::size_t num_nodes() const noexcept { return nodes.size(); }
  std::size_t num_users() const noexcept { return users.size(); }
  double distance(std::size_t m, std::size_t n) const noexcept;
  bool is_neighbor(std::size_t m, std::size_t n) const noexcept;
  bool can_serve(std::size_t m, std::size_t n) const noexcept;
  std::size_t edge_count() const noexcept;
};

/// Builds neighbor sets from positions, caches and requests. Throws ConfigError
/// unless d_i > d_s > 0.
Topology make_topology(std::vector<CachingNode> nodes, std::vector<User> users, double d_s,
                       double d_i, std::size_t file_count);

/// Drops users with no server, then nodes with nothing to serve, and rebuilds
/// the neighbor sets. Stable ids are kept.
Topology prune(const Topology& topo);

/// Keeps the first `max_users` users (in index order) and prunes again.
Topology truncate_users(const Topology& topo, std::size_t max_users);

/// Sub-topology on the given node/user subsets with neighbor relations
/// recomputed among them, then pruned. `node_map`/`user_map` map sub indices to
/// indices of the parent topology.
struct Restriction {
  Topology topology;
  std::vector<std::size_t> node_map;
  std::vector<std::size_t> user_map;
};
Restriction restrict_topology(const Topology& topo, const std::vector<bool>& keep_node,
                              const std::vector<bool>& keep_user);

/// Returns an empty string when all structural invariants of a pruned topology hold
/// (every node has a servable user, every user a server), else a description of
/// the first violation found.
std::string check_invariants(const Topology& topo);

/// Homogeneous PPP: Poisson(intensity * area) points i.i.d. uniform over the region.
std::vector<Point> generate_ppp_points(const Region& region, double intensity, Rng& rng);

/// Per-node cache assignment. Every node caches exactly cache_capacity distinct files
/// except under kExplicit, which reproduces the given lists verbatim.
std::vector<std::vector<FileId>> place_content(const std::vector<std::size_t>& node_ids,
                                               const Library& library,
                                               const PlacementPolicy& policy, Rng& rng);

struct HelperScenario {
  double radius = 100.0;          // coverage radius R; d_s = R, d_i = 3R
  double user_intensity = 1e-4;   // users per m^2
  bool prune = true;
};

/// Three helpers at (0,0), (5R/3, 0), (5R/6, 5*sqrt(3)R/6).
std::vector<Point> helper_positions(double radius);

Topology build_helper_topology(const HelperScenario& scenario, const Library& library,
                               const PlacementPolicy& placement, Rng& rng);

struct D2dScenario {
  double side = 600.0;
  double intensity = 4e-4;
  double activity_probability = 0.2;
  double d_s = 100.0;
  double d_i = 300.0;
  bool prune = true;
};

Topology build_d2d_topology(const D2dScenario& scenario, const Library& library,
                            const PlacementPolicy& placement, Rng& rng);

}  // namespace cachesched
