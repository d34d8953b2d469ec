// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

// Own entry point: the packaged benchmark_main archive is not portable across
// compiler releases.
#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
