// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "cachesched/baselines.hpp"
#include "support/instances.hpp"

namespace cachesched {
namespace {

void BM_ExhaustiveSearch(benchmark::State& state) {
  Rng rng(11);
  testing::RandomInstanceSpec spec;
  spec.max_nodes = static_cast<std::size_t>(state.range(0));
  spec.min_nodes = (spec.max_nodes + 1) / 2;
  spec.max_users = static_cast<std::size_t>(state.range(1));
  spec.min_users = (spec.max_users + 1) / 2;
  spec.cache_capacity = spec.file_count;
  spec.levels = 2;
  spec.side = 200.0;
  const testing::OwnedInstance inst = testing::random_instance(rng, spec);
  for (auto _ : state) benchmark::DoNotOptimize(exhaustive_search(inst.view()));
  state.counters["candidates"] = static_cast<double>(search_space_size(inst.topology, spec.levels));
}
BENCHMARK(BM_ExhaustiveSearch)->Args({2, 4})->Args({3, 6})->Args({4, 6});

void BM_Cluster1(benchmark::State& state) {
  Rng rng(13);
  testing::RandomInstanceSpec spec;
  spec.max_nodes = static_cast<std::size_t>(state.range(0));
  spec.min_nodes = (spec.max_nodes + 1) / 2;
  spec.max_users = static_cast<std::size_t>(state.range(1));
  spec.min_users = (spec.max_users + 1) / 2;
  spec.cache_capacity = spec.file_count;
  spec.side = 600.0;
  const testing::OwnedInstance inst = testing::random_instance(rng, spec);
  const ClusterPlan plan = make_cluster_plan(inst.topology, ClusterGrid::covering(600.0, 3));
  for (auto _ : state) benchmark::DoNotOptimize(clustering_schedule_1(inst.view(), plan));
}
BENCHMARK(BM_Cluster1)->Args({20, 40});

}  // namespace
}  // namespace cachesched
