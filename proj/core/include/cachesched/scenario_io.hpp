// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "cachesched/topology.hpp"

namespace cachesched {

/// Scenario file: positions (m), cache lists, requests, d_s/d_i and the seed that
/// produced it. Neighbor sets are derived on load, never stored. See docs/scenario_format.md.
struct Scenario {
  std::string kind;  // "helper", "d2d" or "custom"
  std::uint64_t seed = 0;
  Topology topology;
};

std::string scenario_to_json(const Scenario& scenario, int indent = 2);
Scenario scenario_from_json(const std::string& text);

void write_scenario_file(const std::string& path, const Scenario& scenario);
Scenario read_scenario_file(const std::string& path);

}  // namespace cachesched
