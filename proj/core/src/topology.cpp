// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cachesched/errors.hpp"

namespace cachesched {

double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

bool DiskUnionRegion::contains(Point p) const noexcept {
  return std::any_of(centers.begin(), centers.end(),
                     [&](Point c) { return distance(c, p) <= radius; });
}

SquareRegion DiskUnionRegion::bounding_square() const {
  if (centers.empty()) return SquareRegion{0.0, {}};
  double lo_x = centers.front().x, hi_x = lo_x;
  double lo_y = centers.front().y, hi_y = lo_y;
  for (const Point& c : centers) {
    lo_x = std::min(lo_x, c.x);
    hi_x = std::max(hi_x, c.x);
    lo_y = std::min(lo_y, c.y);
    hi_y = std::max(hi_y, c.y);
  }
  const double side = std::max(hi_x - lo_x, hi_y - lo_y) + 2.0 * radius;
  return SquareRegion{side, {lo_x - radius, lo_y - radius}};
}

Library Library::zipf(std::size_t file_count, double exponent, std::size_t cache_capacity) {
  if (file_count == 0) throw ConfigError("library must contain at least one file");
  if (exponent < 0.0) throw ConfigError("zipf exponent must be non-negative");
  if (cache_capacity > file_count) throw ConfigError("cache capacity exceeds library size");
  Library lib;
  lib.file_count = file_count;
  lib.zipf_exponent = exponent;
  lib.cache_capacity = cache_capacity;
  lib.popularity.resize(file_count);
  for (std::size_t f = 0; f < file_count; ++f) {
    lib.popularity[f] = std::pow(static_cast<double>(f + 1), -exponent);
  }
  const double total = std::accumulate(lib.popularity.begin(), lib.popularity.end(), 0.0);
  for (double& p : lib.popularity) p /= total;
  return lib;
}

namespace {

// Inverse-CDF draw from unnormalized non-negative weights; skips zero weights.
std::size_t sample_weighted(const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

bool sorted_contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::binary_search(v.begin(), v.end(), x);
}

}  // namespace

FileId Library::sample_request(Rng& rng) const { return sample_weighted(popularity, rng); }

PlacementKind parse_placement_kind(const std::string& name) {
  if (name == "popularity") return PlacementKind::kPopularityWeighted;
  if (name == "uniform") return PlacementKind::kUniform;
  if (name == "explicit") return PlacementKind::kExplicit;
  throw ConfigError("unknown placement policy '" + name + "'");
}

std::string to_string(PlacementKind kind) {
  switch (kind) {
    case PlacementKind::kPopularityWeighted: return "popularity";
    case PlacementKind::kUniform: return "uniform";
    case PlacementKind::kExplicit: return "explicit";
  }
  return "?";
}

bool CachingNode::caches(FileId f) const noexcept {
  return std::binary_search(cache.begin(), cache.end(), f);
}

double Topology::distance(std::size_t m, std::size_t n) const noexcept {
  return cachesched::distance(nodes[m].position, users[n].position);
}

bool Topology::is_neighbor(std::size_t m, std::size_t n) const noexcept {
  return sorted_contains(node_users[m], n);
}

bool Topology::can_serve(std::size_t m, std::size_t n) const noexcept {
  return sorted_contains(node_servable[m], n);
}

std::size_t Topology::edge_count() const noexcept {
  std::size_t e = 0;
  for (const auto& u : node_users) e += u.size();
  return e;
}

Topology make_topology(std::vector<CachingNode> nodes, std::vector<User> users, double d_s,
                       double d_i, std::size_t file_count) {
  if (!(d_s > 0.0)) throw ConfigError("d_s must be positive");
  if (!(d_i > d_s)) throw ConfigError("d_i must exceed d_s");
  Topology t;
  t.nodes = std::move(nodes);
  t.users = std::move(users);
  t.d_s = d_s;
  t.d_i = d_i;
  t.file_count = file_count;
  for (auto& node : t.nodes) {
    std::sort(node.cache.begin(), node.cache.end());
    node.cache.erase(std::unique(node.cache.begin(), node.cache.end()), node.cache.end());
  }
  const std::size_t M = t.nodes.size();
  const std::size_t N = t.users.size();
  t.node_users.assign(M, {});
  t.node_servable.assign(M, {});
  t.user_nodes.assign(N, {});
  t.user_servers.assign(N, {});
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      const double d = t.distance(m, n);
      if (d > d_i) continue;
      t.node_users[m].push_back(n);
      t.user_nodes[n].push_back(m);
      if (d <= d_s && t.nodes[m].caches(t.users[n].requested_file)) {
        t.node_servable[m].push_back(n);
        t.user_servers[n].push_back(m);
      }
    }
  }
  return t;
}

Topology prune(const Topology& topo) {
  std::vector<User> users;
  for (std::size_t n = 0; n < topo.num_users(); ++n) {
    if (!topo.user_servers[n].empty()) users.push_back(topo.users[n]);
  }
  // Removing a node with empty V_m never empties any J_n, so one pass suffices.
  std::vector<CachingNode> nodes;
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    if (!topo.node_servable[m].empty()) nodes.push_back(topo.nodes[m]);
  }
  return make_topology(std::move(nodes), std::move(users), topo.d_s, topo.d_i, topo.file_count);
}

Topology truncate_users(const Topology& topo, std::size_t max_users) {
  if (topo.num_users() <= max_users) return topo;
  std::vector<User> users(topo.users.begin(),
                          topo.users.begin() + static_cast<std::ptrdiff_t>(max_users));
  return prune(make_topology(topo.nodes, std::move(users), topo.d_s, topo.d_i, topo.file_count));
}

Restriction restrict_topology(const Topology& topo, const std::vector<bool>& keep_node,
                              const std::vector<bool>& keep_user) {
  CACHESCHED_CHECK(keep_node.size() == topo.num_nodes(), "node mask size");
  CACHESCHED_CHECK(keep_user.size() == topo.num_users(), "user mask size");
  std::vector<CachingNode> nodes;
  std::vector<User> users;
  std::vector<std::size_t> node_map, user_map;
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    if (keep_node[m]) {
      nodes.push_back(topo.nodes[m]);
      node_map.push_back(m);
    }
  }
  for (std::size_t n = 0; n < topo.num_users(); ++n) {
    if (keep_user[n]) {
      users.push_back(topo.users[n]);
      user_map.push_back(n);
    }
  }
  Topology full = make_topology(std::move(nodes), std::move(users), topo.d_s, topo.d_i,
                                topo.file_count);
  // Prune while tracking the index maps.
  Restriction r;
  std::vector<bool> sub_keep_user(full.num_users()), sub_keep_node(full.num_nodes());
  for (std::size_t n = 0; n < full.num_users(); ++n) {
    sub_keep_user[n] = !full.user_servers[n].empty();
  }
  for (std::size_t m = 0; m < full.num_nodes(); ++m) {
    sub_keep_node[m] = !full.node_servable[m].empty();
  }
  std::vector<CachingNode> kept_nodes;
  std::vector<User> kept_users;
  for (std::size_t m = 0; m < full.num_nodes(); ++m) {
    if (!sub_keep_node[m]) continue;
    kept_nodes.push_back(full.nodes[m]);
    r.node_map.push_back(node_map[m]);
  }
  for (std::size_t n = 0; n < full.num_users(); ++n) {
    if (!sub_keep_user[n]) continue;
    kept_users.push_back(full.users[n]);
    r.user_map.push_back(user_map[n]);
  }
  r.topology = make_topology(std::move(kept_nodes), std::move(kept_users), topo.d_s, topo.d_i,
                             topo.file_count);
  return r;
}

std::string check_invariants(const Topology& t) {
  std::ostringstream err;
  if (!(t.d_i > t.d_s && t.d_s > 0.0)) return "require d_i > d_s > 0";
  const std::size_t M = t.num_nodes(), N = t.num_users();
  if (t.node_users.size() != M || t.node_servable.size() != M || t.user_nodes.size() != N ||
      t.user_servers.size() != N) {
    return "neighbor set sizes do not match node/user counts";
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (t.node_servable[m].empty()) {
      err << "node " << m << " has no servable user";
      return err.str();
    }
    for (std::size_t n : t.node_servable[m]) {
      if (!t.is_neighbor(m, n)) {
        err << "V_" << m << " not a subset of U_" << m;
        return err.str();
      }
      if (!t.nodes[m].caches(t.users[n].requested_file) || t.distance(m, n) > t.d_s) {
        err << "signal link (" << m << "," << n << ") violates cache-hit/d_s rule";
        return err.str();
      }
    }
  }
  for (std::size_t n = 0; n < N; ++n) {
    if (t.user_servers[n].empty()) {
      err << "user " << n << " has no server";
      return err.str();
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      const bool in_u = sorted_contains(t.node_users[m], n);
      const bool in_h = sorted_contains(t.user_nodes[n], m);
      const bool in_v = sorted_contains(t.node_servable[m], n);
      const bool in_j = sorted_contains(t.user_servers[n], m);
      if (in_u != in_h || in_v != in_j) {
        err << "asymmetric neighbor relation at (" << m << "," << n << ")";
        return err.str();
      }
      if (in_j && !in_h) {
        err << "J_" << n << " not a subset of H_" << n;
        return err.str();
      }
    }
  }
  return {};
}

std::vector<Point> generate_ppp_points(const Region& region, double intensity, Rng& rng) {
  if (!(intensity > 0.0)) throw ConfigError("PPP intensity must be positive");
  const auto sample_square = [&](const SquareRegion& sq) {
    std::vector<Point> pts;
    const double area = sq.area();
    if (!(area > 0.0)) return pts;
    if (!std::isfinite(area)) throw ConfigError("PPP region area must be finite");
    std::poisson_distribution<std::uint64_t> count_dist(intensity * area);
    const std::uint64_t count = count_dist(rng);
    pts.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const double x = sq.origin.x + uniform01(rng) * sq.side;
      const double y = sq.origin.y + uniform01(rng) * sq.side;
      pts.push_back({x, y});
    }
    return pts;
  };
  if (const auto* sq = std::get_if<SquareRegion>(&region)) return sample_square(*sq);
  const auto& disks = std::get<DiskUnionRegion>(region);
  if (!(disks.radius > 0.0)) throw ConfigError("coverage radius must be positive");
  std::vector<Point> pts = sample_square(disks.bounding_square());
  std::erase_if(pts, [&](Point p) { return !disks.contains(p); });
  return pts;
}

std::vector<std::vector<FileId>> place_content(const std::vector<std::size_t>& node_ids,
                                               const Library& library,
                                               const PlacementPolicy& policy, Rng& rng) {
  const std::size_t capacity = library.cache_capacity;
  if (capacity > library.file_count) throw ConfigError("cache capacity exceeds library size");
  std::vector<std::vector<FileId>> caches(node_ids.size());

  if (policy.kind == PlacementKind::kExplicit) {
    for (const auto& [id, files] : policy.explicit_caches) {
      if (files.size() > capacity) {
        throw ConfigError("explicit placement for node " + std::to_string(id) +
                          " exceeds cache capacity");
      }
      for (FileId f : files) {
        if (f >= library.file_count) {
          throw ConfigError("explicit placement names unknown file " + std::to_string(f));
        }
      }
      std::vector<FileId> sorted = files;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("explicit placement for node " + std::to_string(id) +
                          " repeats a file");
      }
    }
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
      auto it = policy.explicit_caches.find(node_ids[i]);
      if (it != policy.explicit_caches.end()) caches[i] = it->second;
    }
    return caches;
  }

  for (auto& cache : caches) {
    std::vector<double> weights =
        policy.kind == PlacementKind::kUniform
            ? std::vector<double>(library.file_count, 1.0)
            : library.popularity;
    cache.reserve(capacity);
    for (std::size_t k = 0; k < capacity; ++k) {
      const std::size_t f = sample_weighted(weights, rng);
      cache.push_back(f);
      weights[f] = 0.0;
    }
    std::sort(cache.begin(), cache.end());
  }
  return caches;
}

std::vector<Point> helper_positions(double radius) {
  const double r = radius;
  return {{0.0, 0.0}, {5.0 / 3.0 * r, 0.0}, {5.0 / 6.0 * r, 5.0 * std::sqrt(3.0) / 6.0 * r}};
}

Topology build_helper_topology(const HelperScenario& scenario, const Library& library,
                               const PlacementPolicy& placement, Rng& rng) {
  if (!(scenario.radius > 0.0)) throw ConfigError("helper coverage radius must be positive");
  const double d_s = scenario.radius;
  const double d_i = 3.0 * scenario.radius;
  const std::vector<Point> helpers = helper_positions(scenario.radius);

  std::vector<std::size_t> ids{0, 1, 2};
  auto caches = place_content(ids, library, placement, rng);
  std::vector<CachingNode> nodes;
  for (std::size_t m = 0; m < helpers.size(); ++m) {
    nodes.push_back({ids[m], helpers[m], std::move(caches[m])});
  }

  // Users outside every d_i-disk have no neighbor and would be pruned anyway.
  const auto positions =
      generate_ppp_points(DiskUnionRegion{helpers, d_i}, scenario.user_intensity, rng);
  std::vector<User> users;
  users.reserve(positions.size());
  for (std::size_t n = 0; n < positions.size(); ++n) {
    users.push_back({n, positions[n], library.sample_request(rng)});
  }
  Topology t = make_topology(std::move(nodes), std::move(users), d_s, d_i, library.file_count);
  return scenario.prune ? prune(t) : t;
}

Topology build_d2d_topology(const D2dScenario& scenario, const Library& library,
                            const PlacementPolicy& placement, Rng& rng) {
  if (!(scenario.activity_probability > 0.0 && scenario.activity_probability < 1.0)) {
    throw ConfigError("activity probability must lie in (0, 1)");
  }
  if (!(scenario.side > 0.0)) throw ConfigError("region side must be positive");
  const auto devices = generate_ppp_points(SquareRegion{scenario.side, {}}, scenario.intensity, rng);

  std::vector<Point> node_pos, user_pos;
  for (const Point& p : devices) {
    (uniform01(rng) < scenario.activity_probability ? user_pos : node_pos).push_back(p);
  }
  std::vector<std::size_t> ids(node_pos.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  auto caches = place_content(ids, library, placement, rng);
  std::vector<CachingNode> nodes;
  nodes.reserve(node_pos.size());
  for (std::size_t m = 0; m < node_pos.size(); ++m) {
    nodes.push_back({m, node_pos[m], std::move(caches[m])});
  }
  std::vector<User> users;
  users.reserve(user_pos.size());
  for (std::size_t n = 0; n < user_pos.size(); ++n) {
    users.push_back({n, user_pos[n], library.sample_request(rng)});
  }
  Topology t = make_topology(std::move(nodes), std::move(users), scenario.d_s, scenario.d_i,
                             library.file_count);
  return scenario.prune ? prune(t) : t;
}

}  // namespace cachesched
