// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cachesched/errors.hpp"

namespace cachesched {

SchedulerKind parse_scheduler(const std::string& name) {
  if (name == "bp-matching") return SchedulerKind::kBpMatching;
  if (name == "bp-raw") return SchedulerKind::kBpRaw;
  if (name == "approx-bp-matching") return SchedulerKind::kApproxBpMatching;
  if (name == "exhaustive") return SchedulerKind::kExhaustive;
  if (name == "cluster1") return SchedulerKind::kCluster1;
  if (name == "cluster2") return SchedulerKind::kCluster2;
  throw ConfigError("unknown scheduler '" + name +
                    "' (bp-matching, bp-raw, approx-bp-matching, exhaustive, cluster1, cluster2)");
}

std::string to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kBpMatching: return "bp-matching";
    case SchedulerKind::kBpRaw: return "bp-raw";
    case SchedulerKind::kApproxBpMatching: return "approx-bp-matching";
    case SchedulerKind::kExhaustive: return "exhaustive";
    case SchedulerKind::kCluster1: return "cluster1";
    case SchedulerKind::kCluster2: return "cluster2";
  }
  return "unknown";
}

Scenario build_scenario(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  Scenario s;
  s.seed = seed;
  if (config.scenario == "file") {
    s = read_scenario_file(config.scenario_file);
  } else {
    const Library library =
        Library::zipf(config.file_count, config.zipf_exponent, config.cache_capacity);
    PlacementPolicy placement;
    placement.kind = parse_placement_kind(config.placement);
    if (placement.kind == PlacementKind::kExplicit) {
      throw ConfigError("explicit placement needs a scenario file");
    }
    Rng rng(mix_seed({seed, tag(StreamTag::kTopology)}));
    s.kind = config.scenario;
    if (config.scenario == "helper") {
      HelperScenario h;
      h.radius = config.d_s;
      h.user_intensity = config.helper_user_intensity;
      h.prune = config.prune;
      s.topology = build_helper_topology(h, library, placement, rng);
    } else {
      D2dScenario d;
      d.side = config.region_side;
      d.intensity = config.d2d_intensity;
      d.activity_probability = config.activity_probability;
      d.d_s = config.d_s;
      d.d_i = config.d_i;
      d.prune = config.prune;
      s.topology = build_d2d_topology(d, library, placement, rng);
    }
  }
  if (config.prune_cluster_orphans) {
    // Users the cell-local baselines can never reach would diverge under every
    // clustering scheduler regardless of load.
    const SquareRegion square = deployment_square(config, s.topology);
    const ClusterPlan plan = make_cluster_plan(
        s.topology, ClusterGrid::covering(square.side, config.cluster_cells_per_axis, square.origin));
    std::vector<bool> keep_node(s.topology.num_nodes(), true);
    std::vector<bool> keep_user(s.topology.num_users(), false);
    for (std::size_t n = 0; n < s.topology.num_users(); ++n) {
      for (std::size_t m : s.topology.user_servers[n]) {
        if (plan.node_cluster(m) == plan.user_cluster(n)) keep_user[n] = true;
      }
    }
    s.topology = restrict_topology(s.topology, keep_node, keep_user).topology;
  }
  if (config.max_users > 0 && s.topology.num_users() > config.max_users) {
    s.topology = truncate_users(s.topology, config.max_users);
  }
  return s;
}

SquareRegion deployment_square(const SimConfig& config, const Topology& topo) {
  if (config.scenario == "d2d") return SquareRegion{config.region_side, Point{0.0, 0.0}};
  if (config.scenario == "helper") {
    return DiskUnionRegion{helper_positions(config.d_s), config.d_i}.bounding_square();
  }
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  auto grow = [&](Point p) {
    lo_x = std::min(lo_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_x = std::max(hi_x, p.x);
    hi_y = std::max(hi_y, p.y);
  };
  for (const auto& c : topo.nodes) grow(c.position);
  for (const auto& u : topo.users) grow(u.position);
  if (lo_x > hi_x) return SquareRegion{1.0, Point{}};
  return SquareRegion{std::max({hi_x - lo_x, hi_y - lo_y, 1.0}), Point{lo_x, lo_y}};
}

bool detect_divergence(const std::vector<SlotMetrics>& slots, double ratio, double* score) {
  const std::size_t t = slots.size();
  if (t == 0) {
    if (score) *score = 0.0;
    return false;
  }
  const std::size_t decile = std::max<std::size_t>(1, t / 10);
  auto mean = [&](std::size_t begin) {
    double sum = 0.0;
    for (std::size_t i = begin; i < begin + decile; ++i) {
      sum += static_cast<double>(slots[i].total_backlog);
    }
    return sum / static_cast<double>(decile);
  };
  const std::size_t mid = std::min(t - decile, (t - decile) / 2);
  const double s = mean(t - decile) / std::max(mean(mid), 1.0);
  if (score) *score = s;
  return s > ratio;
}

RunResult run_simulation(const SimConfig& config, const Topology& topo) {
  config.validate();
  const SchedulerKind kind = parse_scheduler(config.scheduler);
  const PowerGrid grid = PowerGrid::uniform(config.power_levels, config.q_max);
  const std::size_t M = topo.num_nodes();
  const std::size_t N = topo.num_users();

  LinkModel link;
  link.bandwidth_hz = config.bandwidth_hz;
  link.noise_power = config.noise_power;
  link.slot_seconds = config.slot_seconds;
  link.chunk_bits = config.chunk_bits;

  const bool clustered = kind == SchedulerKind::kCluster1 || kind == SchedulerKind::kCluster2;
  ClusterPlan plan;
  LinkModel eval_link = link;
  if (clustered) {
    const SquareRegion square = deployment_square(config, topo);
    plan = make_cluster_plan(
        topo, ClusterGrid::covering(square.side, config.cluster_cells_per_axis, square.origin));
    eval_link = cluster_link(link, plan);
  }

  BpConfig bp;
  bp.iterations = config.bp_iterations;
  bp.temperature = config.bp_temperature;
  bp.domain = config.bp_domain == "linear" ? MessageDomain::kLinear : MessageDomain::kLog;
  bp.approx_neighbors = kind == SchedulerKind::kApproxBpMatching ? config.approx_neighbors : 0;
  bp.mean_field = parse_mean_field_rule(config.approx_mean_field);
  bp.enumeration_cap = config.enumeration_cap;

  LinkScheduleOptions order;
  order.order = config.node_order == "shuffled" ? NodeOrder::kShuffled : NodeOrder::kAscending;

  QueueState queues(N, config.delay_thresholds);
  Rng arrivals_rng(mix_seed({config.seed, tag(StreamTag::kArrivals)}));
  const std::uint64_t channel_seed = mix_seed({config.seed, tag(StreamTag::kChannel)});
  const std::size_t proposal_bound = M * (M + 1) / 2;
  const double max_power = static_cast<double>(M) * config.q_max;

  RunResult result;
  RunSummary& sum = result.summary;
  sum.scheduler = to_string(kind);
  sum.seed = config.seed;
  sum.nodes = M;
  sum.users = N;
  sum.slots = config.slots;
  sum.delay_thresholds = config.delay_thresholds;
  result.slots.reserve(config.slots);

  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;
  for (std::size_t t = 0; t < config.slots; ++t) {
    const auto slot = static_cast<std::int64_t>(t);
    const ChannelRealization channel =
        sample_channel(topo, config.path_loss_exponent, channel_seed, t);
    const std::vector<Chunks> backlog = queues.backlogs();
    const SlotInstance inst{topo, channel, grid, link, backlog, config.V};

    SlotMetrics row;
    row.slot = slot;
    ScheduleDecision decision;
    switch (kind) {
      case SchedulerKind::kBpMatching:
      case SchedulerKind::kApproxBpMatching: {
        const Marginals marginals = run_bp(inst, bp);
        sum.bp_underflow_fallbacks += marginals.underflow_fallbacks;
        order.order_seed = mix_seed({config.seed, tag(StreamTag::kOrder), t});
        const LinkScheduleResult r = link_schedule(inst, marginals, order);
        decision = r.decision;
        row.proposals = r.stats.proposals;
        if (r.stats.proposals > proposal_bound) ++sum.proposal_bound_violations;
        break;
      }
      case SchedulerKind::kBpRaw: {
        const Marginals marginals = run_bp(inst, bp);
        sum.bp_underflow_fallbacks += marginals.underflow_fallbacks;
        decision = decide(topo, marginals);
        break;
      }
      case SchedulerKind::kExhaustive:
        decision = exhaustive_search(inst, config.exhaustive_cap);
        break;
      case SchedulerKind::kCluster1:
        decision = clustering_schedule_1(inst, plan);
        break;
      case SchedulerKind::kCluster2:
        decision = clustering_schedule_2(inst, plan, bp, order);
        break;
    }
    CACHESCHED_CHECK(check_decision(topo, grid, decision).empty(), "scheduler produced invalid decision");

    const SlotInstance eval{topo, channel, grid, eval_link, backlog, config.V};
    std::vector<Chunks> served(N, 0);
    for (std::size_t n = 0; n < N; ++n) {
      served[n] = served_chunks(eval, decision, n);
      row.served += served[n];
    }
    row.utility = global_utility(eval, decision);
    if (config.shadow_oracle) {
      const double oracle = global_utility(eval, exhaustive_search(eval, config.exhaustive_cap));
      row.oracle_utility = oracle;
      if (row.utility > oracle + 1e-9 * std::max(1.0, std::abs(oracle))) ++sum.oracle_violations;
      if (oracle > 0.0) {
        ratio_sum += row.utility / oracle;
        ++ratio_count;
      }
    }

    const std::vector<Chunks> arrivals = sample_arrivals(N, config.a_max, arrivals_rng);
    queues.advance(served, arrivals, slot);
    for (std::size_t n = 0; n < N; ++n) {
      row.arrived += arrivals[n];
      if (queues.backlog(n) != backlog[n] - served[n] + arrivals[n]) ++sum.conservation_violations;
    }

    row.backlog = backlog;
    for (Chunks q : backlog) row.total_backlog += q;
    row.total_power = total_power(grid, decision);
    CACHESCHED_CHECK(row.total_power >= 0.0 && row.total_power <= max_power * (1.0 + 1e-12),
                     "slot power outside [0, M q_max]");
    row.active_links = active_links(decision);
    for (std::size_t i = 0; i < config.delay_thresholds.size(); ++i) {
      row.failures.push_back(queues.failures(i, slot));
    }
    row.decision = encode_decision(decision);
    sum.max_proposals = std::max(sum.max_proposals, row.proposals);
    result.slots.push_back(std::move(row));
  }

  const double T = static_cast<double>(config.slots);
  for (const SlotMetrics& row : result.slots) {
    sum.mean_total_backlog += static_cast<double>(row.total_backlog) / T;
    sum.mean_power += row.total_power / T;
    sum.mean_active_links += static_cast<double>(row.active_links) / T;
    sum.mean_utility += row.utility / T;
  }
  sum.arrived = queues.arrived();
  sum.served = queues.served();
  sum.final_backlog = queues.total_backlog();
  const auto last = static_cast<std::int64_t>(config.slots) - 1;
  for (std::size_t i = 0; i < config.delay_thresholds.size(); ++i) {
    sum.failure_rates.push_back(queues.failure_rate(i, last));
  }
  sum.unstable = detect_divergence(result.slots, config.divergence_ratio, &sum.divergence_score);
  if (config.shadow_oracle) {
    sum.mean_oracle_ratio = ratio_count > 0 ? ratio_sum / static_cast<double>(ratio_count) : 1.0;
  }
  return result;
}

RunResult run_simulation(const SimConfig& config) {
  const Scenario scenario = build_scenario(config, config.seed);
  return run_simulation(config, scenario.topology);
}

std::vector<SweepRow> sweep(const SimConfig& config, const std::string& parameter,
                            const std::vector<std::string>& values, std::size_t replicates) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (replicates == 0) throw ConfigError("sweep needs at least one replicate");
  const bool thresholds = parameter == "delay_threshold";

  auto replicate_seed = [&](std::size_t r) {
    return replicates == 1 ? config.seed
                           : mix_seed({config.seed, tag(StreamTag::kReplicate), r});
  };

  std::vector<SweepRow> rows;
  if (thresholds) {
    SimConfig c = config;
    c.delay_thresholds.clear();
    for (const auto& v : values) {
      std::size_t used = 0;
      std::int64_t d = -1;
      try {
        d = std::stoll(v, &used);
      } catch (const std::exception&) {
      }
      if (used != v.size() || d < 0) throw ConfigError("bad delay threshold '" + v + "'");
      c.delay_thresholds.push_back(d);
    }
    for (const auto& v : values) {
      rows.push_back(SweepRow{parameter, v, replicates, 0.0, 0.0, {0.0}, 0.0});
    }
    for (std::size_t r = 0; r < replicates; ++r) {
      c.seed = replicate_seed(r);
      const RunResult run = run_simulation(c, build_scenario(c, c.seed).topology);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].mean_total_backlog += run.summary.mean_total_backlog / replicates;
        rows[i].mean_power += run.summary.mean_power / replicates;
        rows[i].failure_rates[0] += run.summary.failure_rates[i] / replicates;
        rows[i].unstable_fraction += run.summary.unstable ? 1.0 / replicates : 0.0;
      }
    }
    return rows;
  }

  for (const auto& v : values) {
    SimConfig c = config;
    set_config_value(c, parameter, v);
    c.validate();
    SweepRow row{parameter, v, replicates, 0.0, 0.0,
                 std::vector<double>(c.delay_thresholds.size(), 0.0), 0.0};
    const double w = 1.0 / static_cast<double>(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
      c.seed = replicate_seed(r);
      const RunResult run = run_simulation(c, build_scenario(c, c.seed).topology);
      row.mean_total_backlog += w * run.summary.mean_total_backlog;
      row.mean_power += w * run.summary.mean_power;
      for (std::size_t i = 0; i < row.failure_rates.size(); ++i) {
        row.failure_rates[i] += w * run.summary.failure_rates[i];
      }
      row.unstable_fraction += run.summary.unstable ? w : 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const RunResult& result) {
  const auto& thresholds = result.summary.delay_thresholds;
  out << "slot,total_queue,total_power,active_links,served,arrived,utility,oracle_utility,proposals";
  for (std::int64_t d : thresholds) out << ",failures_d" << d;
  out << ",decision";
  for (std::size_t n = 0; n < result.summary.users; ++n) out << ",q" << n;
  out << '\n';
  out << std::setprecision(12);
  for (const SlotMetrics& r : result.slots) {
    out << r.slot << ',' << r.total_backlog << ',' << r.total_power << ',' << r.active_links << ','
        << r.served << ',' << r.arrived << ',' << r.utility << ',';
    if (r.oracle_utility) out << *r.oracle_utility;
    out << ',' << r.proposals;
    for (std::int64_t f : r.failures) out << ',' << f;
    out << ',' << r.decision;
    for (Chunks q : r.backlog) out << ',' << q;
    out << '\n';
  }
}

std::string summary_to_json(const RunSummary& s, const SimConfig& config) {
  nlohmann::json failure = nlohmann::json::object();
  for (std::size_t i = 0; i < s.delay_thresholds.size(); ++i) {
    failure[std::to_string(s.delay_thresholds[i])] = s.failure_rates[i];
  }
  nlohmann::json j = {
      {"scheduler", s.scheduler},
      {"seed", s.seed},
      {"nodes", s.nodes},
      {"users", s.users},
      {"slots", s.slots},
      {"mean_total_queue", s.mean_total_backlog},
      {"mean_power", s.mean_power},
      {"mean_active_links", s.mean_active_links},
      {"mean_utility", s.mean_utility},
      {"arrived", s.arrived},
      {"served", s.served},
      {"final_queue", s.final_backlog},
      {"failure_rate", failure},
      {"unstable", s.unstable},
      {"divergence_score", s.divergence_score},
      {"max_proposals", s.max_proposals},
      {"proposal_bound_violations", s.proposal_bound_violations},
      {"conservation_violations", s.conservation_violations},
      {"bp_underflow_fallbacks", s.bp_underflow_fallbacks},
      {"config", nlohmann::json::parse(config_to_json(config))},
  };
  if (s.mean_oracle_ratio) {
    j["mean_oracle_ratio"] = *s.mean_oracle_ratio;
    j["oracle_violations"] = s.oracle_violations;
  }
  return j.dump(2);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const std::vector<std::int64_t>& thresholds) {
  const bool per_threshold = !rows.empty() && rows.front().parameter == "delay_threshold";
  out << "parameter,value,replicates,mean_total_queue,mean_power,unstable_fraction";
  if (per_threshold) {
    out << ",failure_rate";
  } else {
    for (std::int64_t d : thresholds) out << ",failure_rate_d" << d;
  }
  out << '\n' << std::setprecision(12);
  for (const SweepRow& r : rows) {
    out << r.parameter << ',' << r.value << ',' << r.replicates << ',' << r.mean_total_backlog
        << ',' << r.mean_power << ',' << r.unstable_fraction;
    for (double f : r.failure_rates) out << ',' << f;
    out << '\n';
  }
}

}  // namespace cachesched
