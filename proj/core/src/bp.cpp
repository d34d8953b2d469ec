// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "cachesched/errors.hpp"

namespace cachesched {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp.
class LogSum {
 public:
  void add(double x) noexcept {
    if (x == kNegInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const noexcept { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

// Normalizes in place. Returns false (and writes a uniform vector) if the input
// carries no mass.
bool normalize(std::vector<double>& v, MessageDomain domain) {
  const double size = static_cast<double>(v.size());
  if (domain == MessageDomain::kLog) {
    LogSum acc;
    for (double x : v) acc.add(x);
    const double z = acc.value();
    if (!std::isfinite(z)) {
      std::fill(v.begin(), v.end(), -std::log(size));
      return false;
    }
    for (double& x : v) x -= z;
    return true;
  }
  const double z = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(z > 0.0) || !std::isfinite(z)) {
    std::fill(v.begin(), v.end(), 1.0 / size);
    return false;
  }
  for (double& x : v) x /= z;
  return true;
}

// Category of node j's decision as seen by user n: 0 idle, l in [1, L] serves n
// at level l, L + l serves another user at level l. f_n depends on a neighbor's
// decision only through this category.
std::size_t category(const Topology& topo, std::size_t j, std::size_t levels, std::size_t index,
                     std::size_t n) {
  if (index == 0) return 0;
  const std::size_t i = (index - 1) / levels;
  const std::size_t level = (index - 1) % levels + 1;
  return topo.node_servable[j][i] == n ? level : levels + level;
}

struct Contribution {
  double signal = 0.0;
  double interference = 0.0;
  double power = 0.0;
  int servers = 0;
};

struct NeighborView {
  double gain = 0.0;
  bool interferes = true;               // shares n's band
  std::vector<std::size_t> categories;  // categories with positive weight
  std::vector<double> weights;          // indexed by category, in the table's domain
};

void add_category(Contribution& c, const NeighborView& v, std::size_t cat, const PowerGrid& grid,
                  std::size_t levels) {
  if (cat == 0) return;
  if (cat <= levels) {
    const double q = grid.power(cat);
    c.signal += v.gain * q;
    c.power += q;
    ++c.servers;
  } else if (v.interferes) {
    c.interference += v.gain * grid.power(cat - levels);
  }
}

double user_utility(const SlotInstance& inst, std::size_t n, const Contribution& c,
                    double extra_interference) {
  if (c.servers != 1) return 0.0;
  const double rate = shannon_rate(inst.link.bandwidth_hz, c.signal,
                                   c.interference + extra_interference, inst.link.noise_power);
  const Chunks q = inst.backlog[n];
  const Chunks mu = std::min(chunk_capacity(rate, inst.link.slot_seconds, inst.link.chunk_bits), q);
  return static_cast<double>(q) * static_cast<double>(mu) - inst.V * c.power;
}

NeighborView make_view(const SlotInstance& inst, const BeliefTable& table, std::size_t j,
                       std::size_t n, std::size_t e) {
  const std::size_t L = table.levels();
  const bool log_domain = table.domain() == MessageDomain::kLog;
  NeighborView v;
  v.gain = inst.channel.gain(j, n);
  const BandPlan* bands = inst.link.bands;
  v.interferes = bands == nullptr || bands->node_band[j] == bands->user_band[n];
  std::vector<LogSum> log_acc(2 * L + 1);
  std::vector<double> lin_acc(2 * L + 1, 0.0);
  const auto& msg = table.to_user(e);
  for (std::size_t idx = 0; idx < msg.size(); ++idx) {
    const std::size_t c = category(inst.topology, j, L, idx, n);
    if (log_domain) {
      log_acc[c].add(msg[idx]);
    } else {
      lin_acc[c] += msg[idx];
    }
  }
  v.weights.resize(2 * L + 1);
  for (std::size_t c = 0; c < v.weights.size(); ++c) {
    v.weights[c] = log_domain ? log_acc[c].value() : lin_acc[c];
    const bool positive = log_domain ? v.weights[c] != kNegInf : v.weights[c] > 0.0;
    if (positive) v.categories.push_back(c);
  }
  return v;
}

// Shared body of the exact and approximate factor updates. `exact[k]` marks which
// neighbors (by position in H_n) are enumerated; the rest enter as mean interference.
void factor_update_impl(const SlotInstance& inst, double temperature, BeliefTable& table,
                        std::size_t n, const std::vector<bool>& exact, std::size_t cap,
                        MeanFieldRule rule) {
  const Topology& topo = inst.topology;
  const std::size_t L = table.levels();
  const bool log_domain = table.domain() == MessageDomain::kLog;
  const auto& nodes = topo.user_nodes[n];
  const auto edges = table.user_edges(n);
  const std::size_t degree = nodes.size();

  std::vector<NeighborView> views;
  views.reserve(degree);
  for (std::size_t k = 0; k < degree; ++k) {
    views.push_back(make_view(inst, table, nodes[k], n, edges[k]));
  }
  std::vector<double> mean_interference(degree, 0.0);
  for (std::size_t k = 0; k < degree; ++k) {
    if (exact[k] || !views[k].interferes) continue;
    const auto& msg = table.to_user(edges[k]);
    std::vector<double> probs(msg.size());
    for (std::size_t idx = 0; idx < msg.size(); ++idx) {
      probs[idx] = table.to_user_probability(edges[k], idx);
    }
    if (rule == MeanFieldRule::kExpectedPower) {
      mean_interference[k] = views[k].gain * mean_power(topo, nodes[k], inst.grid, probs);
      continue;
    }
    // Strict comparison keeps ties on the lowest index, which is idle.
    const auto mode = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (mode == 0) continue;
    const NodeDecision d = support_decision(topo, nodes[k], L, mode);
    if (d.user() != n) mean_interference[k] = views[k].gain * inst.grid.power(d.level());
  }

  for (std::size_t t = 0; t < degree; ++t) {
    const std::size_t m = nodes[t];
    std::vector<std::size_t> others;
    double extra = 0.0;
    for (std::size_t k = 0; k < degree; ++k) {
      if (k == t) continue;
      if (exact[k]) {
        others.push_back(k);
      } else {
        extra += mean_interference[k];
      }
    }
    std::size_t terms = 1;
    for (std::size_t k : others) {
      const std::size_t width = views[k].categories.size();
      if (width == 0) {
        terms = 0;
        break;
      }
      if (terms > cap / width) {
        throw InfeasibleError("factor update for user " + std::to_string(n) +
                              " exceeds the enumeration cap of " + std::to_string(cap) +
                              " terms; use the approximate update");
      }
      terms *= width;
    }

    // Categories present in m's own support.
    std::vector<std::size_t> own_cats;
    {
      std::vector<bool> seen(2 * L + 1, false);
      const std::size_t size = support_size(topo, m, L);
      for (std::size_t idx = 0; idx < size; ++idx) {
        seen[category(topo, m, L, idx, n)] = true;
      }
      for (std::size_t c = 0; c < seen.size(); ++c) {
        if (seen[c]) own_cats.push_back(c);
      }
    }
    NeighborView own;
    own.gain = views[t].gain;
    own.interferes = views[t].interferes;

    std::vector<LogSum> log_value(2 * L + 1);
    std::vector<double> lin_value(2 * L + 1, 0.0);
    std::vector<std::size_t> digit(others.size(), 0);
    for (std::size_t leaf = 0; leaf < terms; ++leaf) {
      Contribution base;
      double log_w = 0.0;
      double lin_w = 1.0;
      for (std::size_t a = 0; a < others.size(); ++a) {
        const NeighborView& v = views[others[a]];
        const std::size_t c = v.categories[digit[a]];
        add_category(base, v, c, inst.grid, L);
        if (log_domain) {
          log_w += v.weights[c];
        } else {
          lin_w *= v.weights[c];
        }
      }
      for (std::size_t c : own_cats) {
        Contribution total = base;
        add_category(total, own, c, inst.grid, L);
        const double f = user_utility(inst, n, total, extra);
        if (log_domain) {
          log_value[c].add(log_w + temperature * f);
        } else {
          lin_value[c] += lin_w * std::exp(temperature * f);
        }
      }
      for (std::size_t a = 0; a < others.size(); ++a) {
        if (++digit[a] < views[others[a]].categories.size()) break;
        digit[a] = 0;
      }
    }

    auto& out = table.to_node(edges[t]);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
      const std::size_t c = category(topo, m, L, idx, n);
      out[idx] = log_domain ? log_value[c].value() : lin_value[c];
    }
    normalize(out, table.domain());
  }
}

}  // namespace

std::size_t support_size(const Topology& topo, std::size_t m, std::size_t levels) {
  return 1 + levels * topo.node_servable[m].size();
}

NodeDecision support_decision(const Topology& topo, std::size_t m, std::size_t levels,
                              std::size_t index) {
  if (index == 0) return NodeDecision::idle();
  const std::size_t i = (index - 1) / levels;
  return NodeDecision::serve(topo.node_servable[m][i], (index - 1) % levels + 1);
}

std::size_t support_index(const Topology& topo, std::size_t m, std::size_t levels,
                          NodeDecision decision) {
  if (decision.is_idle()) return 0;
  const auto& v = topo.node_servable[m];
  const auto it = std::lower_bound(v.begin(), v.end(), decision.user());
  CACHESCHED_CHECK(it != v.end() && *it == decision.user(), "user outside V_m");
  return 1 + static_cast<std::size_t>(it - v.begin()) * levels + (decision.level() - 1);
}

BeliefTable::BeliefTable(const Topology& topo, std::size_t levels, MessageDomain domain)
    : domain_(domain), levels_(levels) {
  node_edges_.resize(topo.num_nodes());
  user_edges_.resize(topo.num_users());
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    const std::size_t size = support_size(topo, m, levels);
    for (std::size_t n : topo.node_users[m]) {
      const std::size_t e = edge_node_.size();
      edge_node_.push_back(m);
      edge_user_.push_back(n);
      node_edges_[m].push_back(e);
      to_user_.emplace_back(size, 0.0);
      to_node_.emplace_back(size, 0.0);
    }
  }
  // user_nodes[n] is sorted by node index and edges are node-major, so appending
  // in edge order keeps user_edges_ aligned with user_nodes.
  for (std::size_t e = 0; e < edge_node_.size(); ++e) user_edges_[edge_user_[e]].push_back(e);
}

std::size_t BeliefTable::edge(std::size_t m, std::size_t n) const {
  for (std::size_t e : node_edges_[m]) {
    if (edge_user_[e] == n) return e;
  }
  CACHESCHED_CHECK(false, "no edge between node and user");
  return 0;
}

double BeliefTable::to_user_probability(std::size_t e, std::size_t index) const {
  const double x = to_user_[e][index];
  return domain_ == MessageDomain::kLog ? std::exp(x) : x;
}

double BeliefTable::to_node_probability(std::size_t e, std::size_t index) const {
  const double x = to_node_[e][index];
  return domain_ == MessageDomain::kLog ? std::exp(x) : x;
}

double Marginals::prob(std::size_t m, std::size_t index) const {
  return std::exp(log_prob[m][index]);
}

MeanFieldRule parse_mean_field_rule(const std::string& name) {
  if (name == "expected") return MeanFieldRule::kExpectedPower;
  if (name == "mode") return MeanFieldRule::kModalPower;
  throw ConfigError("mean-field rule must be expected or mode, got '" + name + "'");
}

std::string to_string(MeanFieldRule rule) {
  return rule == MeanFieldRule::kExpectedPower ? "expected" : "mode";
}

void BpConfig::validate() const {
  if (iterations < 1) throw ConfigError("BP needs at least one iteration");
  if (!(temperature > 0.0)) throw ConfigError("BP temperature must be positive");
  if (enumeration_cap < 1) throw ConfigError("BP enumeration cap must be positive");
}

BeliefTable init_messages(const Topology& topo, std::size_t levels, MessageDomain domain) {
  BeliefTable table(topo, levels, domain);
  for (std::size_t e = 0; e < table.num_edges(); ++e) {
    const double size = static_cast<double>(table.to_user(e).size());
    const double value = domain == MessageDomain::kLog ? -std::log(size) : 1.0 / size;
    std::fill(table.to_user(e).begin(), table.to_user(e).end(), value);
    std::fill(table.to_node(e).begin(), table.to_node(e).end(), value);
  }
  return table;
}

void factor_update(const SlotInstance& inst, double temperature, BeliefTable& table,
                   std::size_t n, std::size_t enumeration_cap) {
  const std::vector<bool> exact(inst.topology.user_nodes[n].size(), true);
  factor_update_impl(inst, temperature, table, n, exact, enumeration_cap,
                     MeanFieldRule::kExpectedPower);
}

void approx_factor_update(const SlotInstance& inst, double temperature, BeliefTable& table,
                          std::size_t n, std::span<const std::size_t> exact_nodes,
                          MeanFieldRule rule) {
  const auto& nodes = inst.topology.user_nodes[n];
  std::vector<bool> exact(nodes.size(), false);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    exact[k] = std::find(exact_nodes.begin(), exact_nodes.end(), nodes[k]) != exact_nodes.end();
  }
  factor_update_impl(inst, temperature, table, n, exact, std::numeric_limits<std::size_t>::max(),
                     rule);
}

std::vector<std::size_t> nearest_neighbors(const Topology& topo, std::size_t n, std::size_t k) {
  std::vector<std::size_t> nodes = topo.user_nodes[n];
  std::stable_sort(nodes.begin(), nodes.end(), [&](std::size_t a, std::size_t b) {
    return topo.distance(a, n) < topo.distance(b, n);
  });
  if (nodes.size() > k) nodes.resize(k);
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

void variable_update(BeliefTable& table, std::size_t m) {
  const auto edges = table.node_edges(m);
  const bool log_domain = table.domain() == MessageDomain::kLog;
  for (std::size_t out_e : edges) {
    auto& out = table.to_user(out_e);
    std::fill(out.begin(), out.end(), log_domain ? 0.0 : 1.0);
    for (std::size_t in_e : edges) {
      if (in_e == out_e) continue;
      const auto& in = table.to_node(in_e);
      for (std::size_t idx = 0; idx < out.size(); ++idx) {
        if (log_domain) {
          out[idx] += in[idx];
        } else {
          out[idx] *= in[idx];
        }
      }
    }
    if (!normalize(out, table.domain())) ++table.underflow_fallbacks;
  }
}

Marginals compute_marginals(const Topology& topo, const BeliefTable& table) {
  Marginals marg;
  marg.levels = table.levels();
  marg.underflow_fallbacks = table.underflow_fallbacks;
  const bool log_domain = table.domain() == MessageDomain::kLog;
  marg.log_prob.resize(topo.num_nodes());
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    std::vector<double> acc(support_size(topo, m, table.levels()), log_domain ? 0.0 : 1.0);
    for (std::size_t e : table.node_edges(m)) {
      const auto& in = table.to_node(e);
      for (std::size_t idx = 0; idx < acc.size(); ++idx) {
        if (log_domain) {
          acc[idx] += in[idx];
        } else {
          acc[idx] *= in[idx];
        }
      }
    }
    if (!normalize(acc, table.domain())) ++marg.underflow_fallbacks;
    if (!log_domain) {
      for (double& x : acc) x = std::log(x);
    }
    marg.log_prob[m] = std::move(acc);
  }
  return marg;
}

Marginals run_bp(const SlotInstance& inst, const BpConfig& config) {
  config.validate();
  const Topology& topo = inst.topology;
  BeliefTable table = init_messages(topo, inst.grid.size(), config.domain);

  std::vector<std::vector<std::size_t>> exact_sets;
  if (config.approx_neighbors > 0) {
    exact_sets.reserve(topo.num_users());
    for (std::size_t n = 0; n < topo.num_users(); ++n) {
      exact_sets.push_back(nearest_neighbors(topo, n, config.approx_neighbors));
    }
  }

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (std::size_t n = 0; n < topo.num_users(); ++n) {
      if (config.approx_neighbors > 0) {
        approx_factor_update(inst, config.temperature, table, n, exact_sets[n], config.mean_field);
      } else {
        factor_update(inst, config.temperature, table, n, config.enumeration_cap);
      }
    }
    if (config.observer) config.observer(it, compute_marginals(topo, table));
    if (it == config.iterations) break;
    for (std::size_t m = 0; m < topo.num_nodes(); ++m) variable_update(table, m);
  }
  return compute_marginals(topo, table);
}

ScheduleDecision decide(const Topology& topo, const Marginals& marginals) {
  ScheduleDecision out = all_idle(topo.num_nodes());
  for (std::size_t m = 0; m < topo.num_nodes(); ++m) {
    const auto& lp = marginals.log_prob[m];
    if (lp.size() < 2) continue;
    std::size_t best = 1;
    for (std::size_t idx = 2; idx < lp.size(); ++idx) {
      if (lp[idx] > lp[best]) best = idx;
    }
    if (lp[best] > lp[0]) out[m] = support_decision(topo, m, marginals.levels, best);
  }
  return out;
}

double mean_power(const Topology& topo, std::size_t m, const PowerGrid& grid,
                  std::span<const double> probabilities) {
  const std::size_t L = grid.size();
  double q = 0.0;
  for (std::size_t idx = 1; idx < probabilities.size(); ++idx) {
    q += probabilities[idx] * grid.power(support_decision(topo, m, L, idx).level());
  }
  return q;
}

std::string marginals_to_json(const Topology& topo, const Marginals& marginals) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t m = 0; m < marginals.num_nodes(); ++m) {
    nlohmann::json serve = nlohmann::json::array();
    for (std::size_t idx = 1; idx < marginals.log_prob[m].size(); ++idx) {
      const NodeDecision d = support_decision(topo, m, marginals.levels, idx);
      serve.push_back({{"user", d.user()}, {"level", d.level()}, {"p", marginals.prob(m, idx)}});
    }
    nodes.push_back({{"node", m}, {"idle", marginals.prob(m, 0)}, {"serve", std::move(serve)}});
  }
  return nlohmann::json{{"nodes", std::move(nodes)}}.dump();
}

}  // namespace cachesched
