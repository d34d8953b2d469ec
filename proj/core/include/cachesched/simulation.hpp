// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cachesched/baselines.hpp"
#include "cachesched/scenario_io.hpp"

namespace cachesched {

enum class SchedulerKind {
  kBpMatching,
  kBpRaw,
  kApproxBpMatching,
  kExhaustive,
  kCluster1,
  kCluster2,
};

SchedulerKind parse_scheduler(const std::string& name);
std::string to_string(SchedulerKind kind);

/// Flat run configuration. Every field is addressable by its name in JSON config
/// files and in `key=value` overrides.
struct SimConfig {
  // Topology.
  std::string scenario = "helper";  // helper | d2d | file
  std::string scenario_file;        // read when scenario == "file"
  double helper_user_intensity = 1e-4;
  double region_side = 600.0;  // d2d square side (m)
  double d2d_intensity = 4e-4;
  double activity_probability = 0.2;
  double d_s = 100.0;  // helper coverage radius; the helper layout requires d_i = 3 d_s
  double d_i = 300.0;
  bool prune = true;
  std::size_t max_users = 0;  // 0 keeps every user
  bool prune_cluster_orphans = false;  // drop users with no server in their own cluster cell
  std::size_t file_count = 100;
  double zipf_exponent = 0.8;
  std::size_t cache_capacity = 10;
  std::string placement = "popularity";

  // Physical layer.
  double bandwidth_hz = 10e6;
  double chunk_bits = 20e3;
  double slot_seconds = 0.01;
  double path_loss_exponent = 3.0;
  double noise_power = 1e-8;
  double q_max = 2.0;
  std::size_t power_levels = 4;

  // Control.
  std::string scheduler = "bp-matching";
  double V = 1.0;
  std::int64_t a_max = 3;
  double bp_temperature = 1.0;
  std::size_t bp_iterations = 10;
  std::string bp_domain = "log";  // log | linear
  std::size_t approx_neighbors = 1;
  std::string approx_mean_field = "mode";  // mode | expected
  std::size_t enumeration_cap = 1'000'000;
  std::size_t exhaustive_cap = 10'000'000;
  std::string node_order = "ascending";  // ascending | shuffled
  std::size_t cluster_cells_per_axis = 3;

  // Run.
  std::size_t slots = 1000;
  std::vector<std::int64_t> delay_thresholds = {5, 10, 20};
  std::uint64_t seed = 1;
  bool shadow_oracle = false;  // also solve every slot exhaustively for reference
  double divergence_ratio = 1.5;
  std::string out;

  void validate() const;
};

SimConfig config_from_json(const std::string& text);
SimConfig load_config(const std::string& path);
std::string config_to_json(const SimConfig& config, int indent = 2);
/// Applies `key=value`; throws ConfigError for unknown keys or malformed values.
void apply_override(SimConfig& config, const std::string& assignment);
void set_config_value(SimConfig& config, const std::string& key, const std::string& value);

/// Topology for `seed` under the configured scenario.
Scenario build_scenario(const SimConfig& config, std::uint64_t seed);

/// Square covering the deployment, used to lay out the cluster grid.
SquareRegion deployment_square(const SimConfig& config, const Topology& topo);

struct SlotMetrics {
  std::int64_t slot = 0;
  std::vector<Chunks> backlog;  // Q_n(t) at the start of the slot
  Chunks total_backlog = 0;
  double total_power = 0.0;
  std::size_t active_links = 0;
  Chunks served = 0;
  Chunks arrived = 0;
  double utility = 0.0;
  std::optional<double> oracle_utility;
  std::size_t proposals = 0;
  std::vector<std::int64_t> failures;  // cumulative, per threshold, after the slot
  std::string decision;
};

struct RunSummary {
  std::string scheduler;
  std::uint64_t seed = 0;
  std::size_t nodes = 0;
  std::size_t users = 0;
  std::size_t slots = 0;
  double mean_total_backlog = 0.0;
  double mean_power = 0.0;
  double mean_active_links = 0.0;
  double mean_utility = 0.0;
  std::int64_t arrived = 0;
  std::int64_t served = 0;
  Chunks final_backlog = 0;
  std::vector<std::int64_t> delay_thresholds;
  std::vector<double> failure_rates;
  bool unstable = false;
  double divergence_score = 0.0;  // last-decile mean / max(middle-decile mean, 1)
  // Shadow oracle (set when enabled).
  std::optional<double> mean_oracle_ratio;  // over slots with positive oracle utility
  std::size_t oracle_violations = 0;        // slots with F above the oracle
  std::size_t max_proposals = 0;
  std::size_t proposal_bound_violations = 0;  // slots above M(M+1)/2
  std::size_t conservation_violations = 0;
  std::size_t bp_underflow_fallbacks = 0;
};

struct RunResult {
  RunSummary summary;
  std::vector<SlotMetrics> slots;
};

/// Per slot: draw the channel, schedule, serve, then append arrivals.
/// Deterministic in (config, topology).
RunResult run_simulation(const SimConfig& config, const Topology& topo);
RunResult run_simulation(const SimConfig& config);

/// Unstable iff the mean backlog over the last tenth of the run exceeds `ratio`
/// times the larger of the middle tenth's mean and one chunk.
bool detect_divergence(const std::vector<SlotMetrics>& slots, double ratio, double* score = nullptr);

struct SweepRow {
  std::string parameter;
  std::string value;
  std::size_t replicates = 0;
  double mean_total_backlog = 0.0;
  double mean_power = 0.0;
  std::vector<double> failure_rates;
  double unstable_fraction = 0.0;
};

/// One row per value, each averaged over `replicates` runs. Replicate r uses seed
/// mix(seed, r) for its topology, channel and arrivals, shared across values.
/// `parameter` is any config key; "delay_threshold" reads failure rates of each
/// threshold from shared runs.
std::vector<SweepRow> sweep(const SimConfig& config, const std::string& parameter,
                            const std::vector<std::string>& values, std::size_t replicates);

void write_metrics_csv(std::ostream& out, const RunResult& result);
std::string summary_to_json(const RunSummary& summary, const SimConfig& config);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const std::vector<std::int64_t>& thresholds);

}  // namespace cachesched
