// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "cachesched/errors.hpp"
#include "cachesched/simulation.hpp"

namespace cachesched {

namespace {

using nlohmann::json;

struct Field {
  const char* key;
  std::function<void(SimConfig&, const json&)> set;
  std::function<json(const SimConfig&)> get;
};

template <typename T>
T convert(const char* key, const json& j) {
  const auto fail = [&](const char* want) {
    throw ConfigError(std::string("config key '") + key + "' expects " + want + ", got " + j.dump());
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) fail("a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) fail("a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) fail("a number");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) fail("a non-negative integer");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) fail("an integer");
  } else {
    if (!j.is_array()) fail("an array of integers");
    for (const auto& e : j) {
      if (!e.is_number_integer()) fail("an array of integers");
    }
  }
  return j.get<T>();
}

template <typename T>
Field field(const char* key, T SimConfig::*member) {
  return Field{key,
               [key, member](SimConfig& c, const json& j) { c.*member = convert<T>(key, j); },
               [member](const SimConfig& c) { return json(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("scenario", &SimConfig::scenario),
      field("scenario_file", &SimConfig::scenario_file),
      field("helper_user_intensity", &SimConfig::helper_user_intensity),
      field("region_side", &SimConfig::region_side),
      field("d2d_intensity", &SimConfig::d2d_intensity),
      field("activity_probability", &SimConfig::activity_probability),
      field("d_s", &SimConfig::d_s),
      field("d_i", &SimConfig::d_i),
      field("prune", &SimConfig::prune),
      field("max_users", &SimConfig::max_users),
      field("prune_cluster_orphans", &SimConfig::prune_cluster_orphans),
      field("file_count", &SimConfig::file_count),
      field("zipf_exponent", &SimConfig::zipf_exponent),
      field("cache_capacity", &SimConfig::cache_capacity),
      field("placement", &SimConfig::placement),
      field("bandwidth_hz", &SimConfig::bandwidth_hz),
      field("chunk_bits", &SimConfig::chunk_bits),
      field("slot_seconds", &SimConfig::slot_seconds),
      field("path_loss_exponent", &SimConfig::path_loss_exponent),
      field("noise_power", &SimConfig::noise_power),
      field("q_max", &SimConfig::q_max),
      field("power_levels", &SimConfig::power_levels),
      field("scheduler", &SimConfig::scheduler),
      field("V", &SimConfig::V),
      field("a_max", &SimConfig::a_max),
      field("bp_temperature", &SimConfig::bp_temperature),
      field("bp_iterations", &SimConfig::bp_iterations),
      field("bp_domain", &SimConfig::bp_domain),
      field("approx_neighbors", &SimConfig::approx_neighbors),
      field("approx_mean_field", &SimConfig::approx_mean_field),
      field("enumeration_cap", &SimConfig::enumeration_cap),
      field("exhaustive_cap", &SimConfig::exhaustive_cap),
      field("node_order", &SimConfig::node_order),
      field("cluster_cells_per_axis", &SimConfig::cluster_cells_per_axis),
      field("slots", &SimConfig::slots),
      field("delay_thresholds", &SimConfig::delay_thresholds),
      field("seed", &SimConfig::seed),
      field("shadow_oracle", &SimConfig::shadow_oracle),
      field("divergence_ratio", &SimConfig::divergence_ratio),
      field("out", &SimConfig::out),
  };
  return table;
}

const Field& find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void SimConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  if (scenario != "helper" && scenario != "d2d" && scenario != "file") {
    throw ConfigError("scenario must be helper, d2d or file, got '" + scenario + "'");
  }
  if (scenario == "file" && scenario_file.empty()) throw ConfigError("scenario_file is required");
  positive(d_s, "d_s");
  positive(d_i, "d_i");
  if (!(d_i > d_s)) throw ConfigError("d_i must exceed d_s");
  if (scenario == "helper" && std::abs(d_i - 3.0 * d_s) > 1e-9 * d_i) {
    throw ConfigError("the helper layout uses d_i = 3 d_s");
  }
  positive(helper_user_intensity, "helper_user_intensity");
  positive(region_side, "region_side");
  positive(d2d_intensity, "d2d_intensity");
  if (!(activity_probability > 0.0 && activity_probability < 1.0)) {
    throw ConfigError("activity_probability must lie in (0, 1)");
  }
  if (file_count == 0) throw ConfigError("file_count must be positive");
  if (cache_capacity > file_count) throw ConfigError("cache_capacity exceeds file_count");
  parse_placement_kind(placement);
  positive(bandwidth_hz, "bandwidth_hz");
  positive(chunk_bits, "chunk_bits");
  positive(slot_seconds, "slot_seconds");
  positive(path_loss_exponent, "path_loss_exponent");
  positive(noise_power, "noise_power");
  positive(q_max, "q_max");
  if (power_levels == 0) throw ConfigError("power_levels must be positive");
  parse_scheduler(scheduler);
  if (!(V >= 0.0) || !std::isfinite(V)) throw ConfigError("V must be non-negative");
  if (a_max < 0) throw ConfigError("a_max must be non-negative");
  positive(bp_temperature, "bp_temperature");
  if (bp_iterations == 0) throw ConfigError("bp_iterations must be positive");
  if (bp_domain != "log" && bp_domain != "linear") throw ConfigError("bp_domain must be log or linear");
  if (approx_neighbors == 0) throw ConfigError("approx_neighbors must be positive");
  parse_mean_field_rule(approx_mean_field);
  if (node_order != "ascending" && node_order != "shuffled") {
    throw ConfigError("node_order must be ascending or shuffled");
  }
  if (cluster_cells_per_axis == 0) throw ConfigError("cluster_cells_per_axis must be positive");
  if (slots == 0) throw ConfigError("slots must be at least 1");
  for (std::int64_t d : delay_thresholds) {
    if (d < 0) throw ConfigError("delay thresholds must be non-negative");
  }
  positive(divergence_ratio, "divergence_ratio");
}

SimConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  SimConfig c;
  for (const auto& [key, value] : j.items()) find_field(key).set(c, value);
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_json(text.str());
}

std::string config_to_json(const SimConfig& config, int indent) {
  json j = json::object();
  for (const Field& f : fields()) j[f.key] = f.get(config);
  return j.dump(indent);
}

void set_config_value(SimConfig& config, const std::string& key, const std::string& value) {
  const Field& f = find_field(key);
  // Values that parse as JSON keep their type (numbers, booleans, arrays);
  // anything else is taken as a bare string.
  json j = json::parse(value, nullptr, false);
  if (j.is_discarded()) j = value;
  f.set(config, j);
}

void apply_override(SimConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

}  // namespace cachesched
