// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "cachesched/matching.hpp"
#include "support/instances.hpp"

namespace cachesched {
namespace {

void BM_LinkSchedule(benchmark::State& state) {
  Rng rng(7);
  testing::RandomInstanceSpec spec;
  spec.max_nodes = static_cast<std::size_t>(state.range(0));
  spec.min_nodes = (spec.max_nodes + 1) / 2;
  spec.max_users = static_cast<std::size_t>(state.range(1));
  spec.min_users = (spec.max_users + 1) / 2;
  spec.cache_capacity = spec.file_count;
  spec.side = 250.0;
  const testing::OwnedInstance inst = testing::random_instance(rng, spec);
  const Marginals marginals = testing::random_marginals(inst.topology, spec.levels, rng, 0.3);
  std::size_t proposals = 0;
  for (auto _ : state) {
    const LinkScheduleResult r = link_schedule(inst.view(), marginals);
    proposals = r.stats.proposals;
    benchmark::DoNotOptimize(r);
  }
  state.counters["proposals"] = static_cast<double>(proposals);
}
BENCHMARK(BM_LinkSchedule)->Args({2, 4})->Args({4, 8})->Args({8, 16})->Args({16, 32});

}  // namespace
}  // namespace cachesched
