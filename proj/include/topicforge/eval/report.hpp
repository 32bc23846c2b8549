#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topicforge/eval/coherence.hpp"
#include "topicforge/json_io.hpp"

namespace topicforge {

/// Flat metric -> scalar map. Metrics defined as a mean over groups also
/// carry the per-group values; a null scalar marks a metric that is
/// undefined for the artifact (for example sibling diversity on a tree
/// without depth-2 nodes).
struct EvalReport {
  std::map<std::string, std::optional<double>> metrics;
  std::map<std::string, std::map<std::string, double>> groups;
  json config = json::object();
  std::vector<std::string> warnings;
  std::string artifact_hash;

  void set(const std::string& name, std::optional<double> v) { metrics[name] = v; }

  void set_grouped(const std::string& name, const std::vector<std::string>& group_names, const MetricValue& v) {
    metrics[name] = v.value;
    auto& g = groups[name];
    for (std::size_t i = 0; i < group_names.size() && i < v.per_group.size(); ++i) g[group_names[i]] = v.per_group[i];
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : metrics) j[k] = v ? json(*v) : json(nullptr);
    json g = json::object();
    for (const auto& [k, m] : groups) g[k] = m;
    j["groups"] = std::move(g);
    j["config"] = config;
    j["warnings"] = warnings;
    j["artifact_hash"] = artifact_hash;
    return j;
  }

  /// Two-column text table, one row per metric.
  std::string table() const {
    std::string out;
    std::size_t width = 6;
    for (const auto& [k, v] : metrics) width = std::max(width, k.size());
    char buf[64];
    for (const auto& [k, v] : metrics) {
      out += k;
      out.append(width + 2 - k.size(), ' ');
      if (v) {
        std::snprintf(buf, sizeof buf, "%.6f", *v);
        out += buf;
      } else {
        out += "n/a";
      }
      out += '\n';
    }
    return out;
  }
};

}  // namespace topicforge
