// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

// cachesim: run, sweep and compare schedulers on generated caching networks.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cachesched/errors.hpp"
#include "cachesched/simulation.hpp"

namespace fs = std::filesystem;
using namespace cachesched;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string scheduler;
  std::string out;
  std::optional<std::size_t> slots;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_run_flags) {
  cmd->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out, "Output directory (file for gen-topology)");
  cmd->add_option("--set", o.overrides, "Config override key=value (repeatable)");
  if (with_run_flags) {
    cmd->add_option("--scheduler", o.scheduler, "Scheduler name");
    cmd->add_option("--slots", o.slots, "Horizon in slots");
  }
}

SimConfig resolve(const CommonOptions& o) {
  SimConfig c = o.config_path.empty() ? SimConfig{} : load_config(o.config_path);
  for (const auto& a : o.overrides) apply_override(c, a);
  if (o.seed) c.seed = *o.seed;
  if (!o.scheduler.empty()) c.scheduler = o.scheduler;
  if (o.slots) c.slots = *o.slots;
  if (!o.out.empty()) c.out = o.out;
  c.validate();
  return c;
}

fs::path output_dir(const SimConfig& c) {
  const fs::path dir = c.out.empty() ? fs::path("out") : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_run(const fs::path& dir, const SimConfig& c, const RunResult& r) {
  std::ofstream csv(dir / "metrics.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
  write_metrics_csv(csv, r);
  write_file(dir / "summary.json", summary_to_json(r.summary, c) + "\n");
}

void print_summary(const RunSummary& s) {
  std::cout << s.scheduler << ": nodes=" << s.nodes << " users=" << s.users
            << " mean_queue=" << s.mean_total_backlog << " mean_power=" << s.mean_power
            << " unstable=" << (s.unstable ? "yes" : "no");
  for (std::size_t i = 0; i < s.delay_thresholds.size(); ++i) {
    std::cout << " fail_d" << s.delay_thresholds[i] << '=' << s.failure_rates[i];
  }
  if (s.mean_oracle_ratio) std::cout << " oracle_ratio=" << *s.mean_oracle_ratio;
  std::cout << '\n';
}

int cmd_run(const CommonOptions& o) {
  const SimConfig c = resolve(o);
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run_simulation(c);
  const fs::path dir = output_dir(c);
  write_run(dir, c, r);
  print_summary(r.summary);
  std::cerr << "wrote " << dir.string() << " in "
            << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            << " s\n";
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& param,
              const std::vector<std::string>& values, std::size_t replicates) {
  const SimConfig c = resolve(o);
  const auto rows = sweep(c, param, values, replicates);
  const fs::path dir = output_dir(c);
  std::ofstream csv(dir / "sweep.csv");
  write_sweep_csv(csv, rows, c.delay_thresholds);
  write_sweep_csv(std::cout, rows, c.delay_thresholds);
  return 0;
}

int cmd_compare(const CommonOptions& o, const std::vector<std::string>& schedulers) {
  SimConfig c = resolve(o);
  const Scenario scenario = build_scenario(c, c.seed);
  const fs::path dir = output_dir(c);
  nlohmann::json all = nlohmann::json::object();
  for (const auto& name : schedulers) {
    c.scheduler = name;
    c.validate();
    const RunResult r = run_simulation(c, scenario.topology);
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    write_run(sub, c, r);
    print_summary(r.summary);
    all[name] = nlohmann::json::parse(summary_to_json(r.summary, c));
  }
  write_file(dir / "compare.json", all.dump(2) + "\n");
  return 0;
}

int cmd_gen_topology(const CommonOptions& o) {
  SimConfig c = resolve(o);
  const Scenario s = build_scenario(c, c.seed);
  const std::string path = o.out.empty() ? "scenario.json" : o.out;
  write_scenario_file(path, s);
  std::cout << "nodes=" << s.topology.num_nodes() << " users=" << s.topology.num_users()
            << " edges=" << s.topology.edge_count() << " -> " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link scheduling and power allocation simulator for wireless caching networks"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, compare_opts, gen_opts;
  auto* run = app.add_subcommand("run", "Simulate one scheduler; writes metrics.csv and summary.json");
  add_common(run, run_opts, true);

  auto* sw = app.add_subcommand("sweep", "Sweep one config key; writes sweep.csv");
  add_common(sw, sweep_opts, true);
  std::string param;
  std::vector<std::string> values;
  std::size_t replicates = 1;
  sw->add_option("--param", param, "Config key, or delay_threshold")->required();
  sw->add_option("--values", values, "Values to sweep")->required()->delimiter(',');
  sw->add_option("--replicates", replicates, "Seeds averaged per value")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Run several schedulers on one topology and seed");
  add_common(cmp, compare_opts, true);
  std::vector<std::string> schedulers = {"bp-matching", "exhaustive"};
  cmp->add_option("--schedulers", schedulers, "Schedulers to compare")->delimiter(',');

  auto* gen = app.add_subcommand("gen-topology", "Write a scenario JSON file");
  add_common(gen, gen_opts, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (sw->parsed()) return cmd_sweep(sweep_opts, param, values, replicates);
    if (cmp->parsed()) return cmd_compare(compare_opts, schedulers);
    if (gen->parsed()) return cmd_gen_topology(gen_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
