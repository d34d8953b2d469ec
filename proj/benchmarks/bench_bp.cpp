// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "cachesched/bp.hpp"
#include "support/instances.hpp"

namespace cachesched {
namespace {

// Dense square so every user hears most nodes; args are (nodes, users, levels).
testing::OwnedInstance dense_instance(benchmark::State& state) {
  Rng rng(42);
  testing::RandomInstanceSpec spec;
  spec.max_nodes = static_cast<std::size_t>(state.range(0));
  spec.min_nodes = (spec.max_nodes + 1) / 2;
  spec.max_users = static_cast<std::size_t>(state.range(1));
  spec.min_users = (spec.max_users + 1) / 2;
  spec.cache_capacity = spec.file_count;
  spec.levels = static_cast<std::size_t>(state.range(2));
  spec.side = 200.0;
  return testing::random_instance(rng, spec);
}

void BM_ExactBp(benchmark::State& state) {
  const testing::OwnedInstance inst = dense_instance(state);
  const BpConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(run_bp(inst.view(), config));
}
BENCHMARK(BM_ExactBp)->Args({2, 4, 2})->Args({3, 6, 2})->Args({4, 8, 2})->Args({4, 8, 4});

void BM_ApproxBp(benchmark::State& state) {
  const testing::OwnedInstance inst = dense_instance(state);
  BpConfig config;
  config.approx_neighbors = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_bp(inst.view(), config));
}
BENCHMARK(BM_ApproxBp)->Args({4, 8, 2})->Args({8, 16, 2})->Args({16, 32, 4});

void BM_LinearDomainBp(benchmark::State& state) {
  const testing::OwnedInstance inst = dense_instance(state);
  BpConfig config;
  config.domain = MessageDomain::kLinear;
  config.temperature = 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(run_bp(inst.view(), config));
}
BENCHMARK(BM_LinearDomainBp)->Args({3, 6, 2});

}  // namespace
}  // namespace cachesched
