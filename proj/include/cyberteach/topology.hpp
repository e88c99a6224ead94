#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cyberteach {

/// A single machine in the simulated network. `id` is the scenario's own
/// symbolic name; `generic_label` is the anonymized hostN form used in
/// prompts and must be a bijection over the scenario's hosts.
struct HostSpec {
  std::string id;
  std::string generic_label;
  std::string subnet;
  bool is_defender_relevant = true;
};

struct RedScriptSpec {
  std::vector<std::string> entry_hosts;  // candidate initial footholds
};

struct ScenarioConfig {
  std::vector<HostSpec> hosts;                       // canonical host order
  std::map<std::string, std::set<std::string>> subnets;
  std::vector<std::pair<std::string, std::string>> edges;  // undirected, by id
  std::string op_server;
  int episode_length = 100;
  RedScriptSpec red_script;

  int num_hosts() const { return static_cast<int>(hosts.size()); }
  int host_index(const std::string& id) const;
  int host_index_by_generic(const std::string& generic) const;
  const HostSpec& host(int index) const { return hosts.at(index); }
  int op_server_index() const { return host_index(op_server); }
  std::vector<std::vector<int>> adjacency() const;  // by host index
};

/// BFS hop counts from the operational server plus the ordered set of hosts
/// that sit on at least one shortest attack path (entry host -> op server).
struct PriorityMap {
  std::unordered_map<std::string, int> hops;
  std::vector<std::string> critical_path_hosts;  // ascending hops, ties by generic label

  bool is_critical(const std::string& id) const;
  int hops_of(const std::string& id) const { return hops.at(id); }
};

/// Parses and validates a scenario file. Throws std::runtime_error naming the
/// violated invariant (duplicate id, missing op_server, unreachable host, ...).
ScenarioConfig load_scenario(const std::string& path);

/// Same validation applied to an already-parsed document (tests, embedding).
ScenarioConfig parse_scenario_text(const std::string& text);

/// Exact single-source BFS distances from the op server; throws if any host
/// is unreachable, naming it.
PriorityMap compute_priorities(const ScenarioConfig& cfg);

/// Built-in 13-host, 3-subnet scenario; mirrors the bundled scenario file.
ScenarioConfig default_scenario();

/// Built-in 7-host, 2-subnet scenario for quick experiments.
ScenarioConfig reduced_scenario();

std::string scenario_to_text(const ScenarioConfig& cfg);

}  // namespace cyberteach
