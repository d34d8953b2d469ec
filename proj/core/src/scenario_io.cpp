// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cachesched/errors.hpp"

namespace cachesched {

using nlohmann::json;

std::string scenario_to_json(const Scenario& scenario, int indent) {
  const Topology& t = scenario.topology;
  json j;
  j["format"] = "cachesched-scenario/1";
  j["kind"] = scenario.kind;
  j["seed"] = scenario.seed;
  j["d_s"] = t.d_s;
  j["d_i"] = t.d_i;
  j["file_count"] = t.file_count;
  json nodes = json::array();
  for (const auto& node : t.nodes) {
    nodes.push_back({{"id", node.id},
                     {"x", node.position.x},
                     {"y", node.position.y},
                     {"cache", node.cache}});
  }
  json users = json::array();
  for (const auto& user : t.users) {
    users.push_back({{"id", user.id},
                     {"x", user.position.x},
                     {"y", user.position.y},
                     {"file", user.requested_file}});
  }
  j["nodes"] = std::move(nodes);
  j["users"] = std::move(users);
  return j.dump(indent);
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    Scenario s;
    s.kind = j.value("kind", std::string("custom"));
    s.seed = j.value("seed", std::uint64_t{0});
    std::vector<CachingNode> nodes;
    for (const auto& jn : j.at("nodes")) {
      nodes.push_back({jn.at("id").get<std::size_t>(),
                       {jn.at("x").get<double>(), jn.at("y").get<double>()},
                       jn.at("cache").get<std::vector<FileId>>()});
    }
    std::vector<User> users;
    for (const auto& ju : j.at("users")) {
      users.push_back({ju.at("id").get<std::size_t>(),
                       {ju.at("x").get<double>(), ju.at("y").get<double>()},
                       ju.at("file").get<FileId>()});
    }
    const auto file_count = j.at("file_count").get<std::size_t>();
    for (const auto& node : nodes) {
      for (FileId f : node.cache) {
        if (f >= file_count) throw ConfigError("scenario caches unknown file " + std::to_string(f));
      }
    }
    for (const auto& user : users) {
      if (user.requested_file >= file_count) {
        throw ConfigError("scenario user requests unknown file " +
                          std::to_string(user.requested_file));
      }
    }
    s.topology = make_topology(std::move(nodes), std::move(users), j.at("d_s").get<double>(),
                               j.at("d_i").get<double>(), file_count);
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
}

void write_scenario_file(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scenario file " + path);
  out << scenario_to_json(scenario) << '\n';
}

Scenario read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

}  // namespace cachesched
