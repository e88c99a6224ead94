#include "cyberteach/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cyberteach {

using nlohmann::json;

int ScenarioConfig::host_index(const std::string& id) const {
  for (size_t i = 0; i < hosts.size(); ++i) {
    if (hosts[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int ScenarioConfig::host_index_by_generic(const std::string& generic) const {
  for (size_t i = 0; i < hosts.size(); ++i) {
    if (hosts[i].generic_label == generic) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::vector<int>> ScenarioConfig::adjacency() const {
  std::vector<std::vector<int>> adj(hosts.size());
  for (const auto& [a, b] : edges) {
    int ia = host_index(a);
    int ib = host_index(b);
    if (ia < 0 || ib < 0) {
      throw std::runtime_error("edge references unknown host: " + (ia < 0 ? a : b));
    }
    adj[ia].push_back(ib);
    adj[ib].push_back(ia);
  }
  for (auto& nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return adj;
}

bool PriorityMap::is_critical(const std::string& id) const {
  return std::find(critical_path_hosts.begin(), critical_path_hosts.end(), id) !=
         critical_path_hosts.end();
}

namespace {

void validate(const ScenarioConfig& cfg) {
  if (cfg.hosts.empty()) throw std::runtime_error("scenario has no hosts");
  if (cfg.episode_length <= 0) throw std::runtime_error("episode_length must be positive");

  std::set<std::string> ids;
  std::set<std::string> generics;
  for (const auto& h : cfg.hosts) {
    if (!ids.insert(h.id).second) throw std::runtime_error("duplicate id: " + h.id);
    if (!generics.insert(h.generic_label).second) {
      throw std::runtime_error("duplicate generic_label: " + h.generic_label);
    }
  }
  if (cfg.host_index(cfg.op_server) < 0) {
    throw std::runtime_error("op_server not among hosts: " + cfg.op_server);
  }
  for (const auto& [a, b] : cfg.edges) {
    if (!ids.count(a)) throw std::runtime_error("edge references unknown host: " + a);
    if (!ids.count(b)) throw std::runtime_error("edge references unknown host: " + b);
  }
  for (const auto& e : cfg.red_script.entry_hosts) {
    if (!ids.count(e)) throw std::runtime_error("entry host unknown: " + e);
  }

  // Connectivity from the op server; compute_priorities re-checks and names
  // the offending host, so here a generic error suffices.
  auto adj = cfg.adjacency();
  std::vector<char> seen(cfg.hosts.size(), 0);
  std::deque<int> queue{cfg.op_server_index()};
  seen[cfg.op_server_index()] = 1;
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    for (int nb : adj[cur]) {
      if (!seen[nb]) {
        seen[nb] = 1;
        queue.push_back(nb);
      }
    }
  }
  for (size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw std::runtime_error("host unreachable from op_server: " + cfg.hosts[i].id);
    }
  }
}

ScenarioConfig from_json(const json& doc) {
  ScenarioConfig cfg;
  cfg.episode_length = doc.value("episode_length", 100);
  cfg.op_server = doc.at("op_server").get<std::string>();
  for (const auto& h : doc.at("hosts")) {
    HostSpec spec;
    spec.id = h.at("id").get<std::string>();
    spec.generic_label = h.at("generic_label").get<std::string>();
    spec.subnet = h.at("subnet").get<std::string>();
    spec.is_defender_relevant = h.value("defender_relevant", true);
    cfg.subnets[spec.subnet].insert(spec.id);
    cfg.hosts.push_back(std::move(spec));
  }
  for (const auto& e : doc.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw std::runtime_error("edge must be a pair");
    cfg.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  }
  if (doc.contains("red_script")) {
    for (const auto& h : doc.at("red_script").at("entry_hosts")) {
      cfg.red_script.entry_hosts.push_back(h.get<std::string>());
    }
  }
  validate(cfg);
  return cfg;
}

std::vector<int> bfs_from(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    for (int nb : adj[cur]) {
      if (dist[nb] < 0) {
        dist[nb] = dist[cur] + 1;
        queue.push_back(nb);
      }
    }
  }
  return dist;
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scenario parse failure: ") + e.what());
  }
  return from_json(doc);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

PriorityMap compute_priorities(const ScenarioConfig& cfg) {
  auto adj = cfg.adjacency();
  int op = cfg.op_server_index();
  std::vector<int> dist_op = bfs_from(adj, op);
  for (size_t i = 0; i < dist_op.size(); ++i) {
    if (dist_op[i] < 0) {
      throw std::runtime_error("host unreachable from op_server: " + cfg.hosts[i].id);
    }
  }

  PriorityMap pm;
  for (int i = 0; i < cfg.num_hosts(); ++i) {
    pm.hops[cfg.hosts[i].id] = dist_op[i];
  }

  // A host lies on a shortest attack path from entry e iff
  // dist(e, h) + dist(h, op) == dist(e, op).
  std::set<int> critical;
  for (const auto& entry : cfg.red_script.entry_hosts) {
    int e = cfg.host_index(entry);
    std::vector<int> dist_e = bfs_from(adj, e);
    for (int h = 0; h < cfg.num_hosts(); ++h) {
      if (dist_e[h] >= 0 && dist_e[h] + dist_op[h] == dist_e[op]) critical.insert(h);
    }
  }

  std::vector<int> ordered(critical.begin(), critical.end());
  std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
    if (dist_op[a] != dist_op[b]) return dist_op[a] < dist_op[b];
    return cfg.hosts[a].generic_label < cfg.hosts[b].generic_label;
  });
  for (int h : ordered) pm.critical_path_hosts.push_back(cfg.hosts[h].id);
  return pm;
}

namespace {

json to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["episode_length"] = cfg.episode_length;
  doc["op_server"] = cfg.op_server;
  doc["hosts"] = json::array();
  for (const auto& h : cfg.hosts) {
    doc["hosts"].push_back({{"id", h.id},
                            {"generic_label", h.generic_label},
                            {"subnet", h.subnet},
                            {"defender_relevant", h.is_defender_relevant}});
  }
  doc["edges"] = json::array();
  for (const auto& [a, b] : cfg.edges) doc["edges"].push_back({a, b});
  doc["red_script"] = {{"entry_hosts", cfg.red_script.entry_hosts}};
  return doc;
}

}  // namespace

std::string scenario_to_text(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.episode_length = 100;
  cfg.op_server = "Op_Server0";
  auto add = [&cfg](const std::string& id, const std::string& generic,
                    const std::string& subnet, bool relevant = true) {
    cfg.hosts.push_back({id, generic, subnet, relevant});
    cfg.subnets[subnet].insert(id);
  };
  // Canonical host order fixes the flat action index layout, so append order
  // matters: generic hostN labels are assigned host1..host13 in this order.
  add("Defender", "host1", "enterprise", false);
  add("Enterprise1", "host2", "enterprise");
  add("Enterprise0", "host3", "enterprise");
  add("Enterprise2", "host4", "enterprise");
  add("Op_Host0", "host5", "operational");
  add("Op_Host1", "host6", "operational");
  add("Op_Host2", "host7", "operational");
  add("Op_Server0", "host8", "operational");
  add("User0", "host9", "user");
  add("User1", "host10", "user");
  add("User2", "host11", "user");
  add("User3", "host12", "user");
  add("User4", "host13", "user");

  cfg.edges = {
      {"User1", "Enterprise1"},  {"User2", "Enterprise1"},
      {"User3", "Enterprise0"},  {"User4", "Enterprise0"},
      {"User0", "User1"},        {"Enterprise1", "Enterprise2"},
      {"Enterprise0", "Enterprise2"}, {"Defender", "Enterprise2"},
      {"Enterprise2", "Op_Server0"},  {"Op_Host0", "Op_Server0"},
      {"Op_Host1", "Op_Server0"},     {"Op_Host2", "Op_Server0"},
  };
  cfg.red_script.entry_hosts = {"User1", "User2", "User3", "User4"};
  validate(cfg);
  return cfg;
}

ScenarioConfig reduced_scenario() {
  ScenarioConfig cfg;
  cfg.episode_length = 50;
  cfg.op_server = "CoreServer";
  auto add = [&cfg](const std::string& id, const std::string& generic,
                    const std::string& subnet, bool relevant = true) {
    cfg.hosts.push_back({id, generic, subnet, relevant});
    cfg.subnets[subnet].insert(id);
  };
  add("Gateway", "host1", "core");
  add("CoreServer", "host2", "core");
  add("Backup", "host3", "core", false);
  add("Desk1", "host4", "office");
  add("Desk2", "host5", "office");
  add("Desk3", "host6", "office");
  add("Desk4", "host7", "office");

  cfg.edges = {
      {"Desk1", "Gateway"}, {"Desk2", "Gateway"}, {"Desk3", "Gateway"},
      {"Desk4", "Gateway"}, {"Gateway", "CoreServer"}, {"Backup", "CoreServer"},
  };
  cfg.red_script.entry_hosts = {"Desk1", "Desk2", "Desk3", "Desk4"};
  validate(cfg);
  return cfg;
}

}  // namespace cyberteach
