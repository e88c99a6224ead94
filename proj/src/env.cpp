#include "cyberteach/env.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace cyberteach {

const char* compromise_name(Compromise c) {
  switch (c) {
    case Compromise::Clean: return "Clean";
    case Compromise::Scanned: return "Scanned";
    case Compromise::UserAccess: return "UserAccess";
    case Compromise::Privileged: return "Privileged";
  }
  return "?";
}

const char* action_kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::Analyse: return "Analyse";
    case ActionKind::Restore: return "Restore";
    case ActionKind::Remove: return "Remove";
    case ActionKind::Patch: return "Patch";
    case ActionKind::Isolate: return "Isolate";
    case ActionKind::Unisolate: return "Unisolate";
    case ActionKind::Monitor: return "Monitor";
  }
  return "?";
}

BlueAction BlueAction::from_index(int index, int n_hosts) {
  if (index < 0 || index >= action_space_size(n_hosts)) {
    throw std::out_of_range("action index out of range: " + std::to_string(index));
  }
  if (index == kTargetedActionKinds * n_hosts) return {ActionKind::Monitor, -1};
  return {static_cast<ActionKind>(index / n_hosts), index % n_hosts};
}

int BlueAction::to_index(int n_hosts) const {
  if (kind == ActionKind::Monitor) return kTargetedActionKinds * n_hosts;
  return static_cast<int>(kind) * n_hosts + target;
}

double RewardModel::severity(Compromise c) const {
  switch (c) {
    case Compromise::Clean: return 0.0;
    case Compromise::Scanned: return severity_scanned;
    case Compromise::UserAccess: return severity_user;
    case Compromise::Privileged: return severity_priv;
  }
  return 0.0;
}

double RewardModel::action_cost(ActionKind k) const {
  switch (k) {
    case ActionKind::Analyse: return cost_analyse;
    case ActionKind::Restore: return cost_restore;
    case ActionKind::Remove: return cost_remove;
    case ActionKind::Patch: return cost_patch;
    case ActionKind::Isolate: return cost_isolate;
    case ActionKind::Unisolate: return cost_unisolate;
    case ActionKind::Monitor: return 0.0;
  }
  return 0.0;
}

double RewardModel::max_total_penalty(const ScenarioConfig& cfg, const PriorityMap& pm) const {
  double total = 0.0;
  for (const auto& h : cfg.hosts) {
    double w = hop_weight(pm.hops_of(h.id));
    total += (severity_priv + isolation_charge) * w;
  }
  return total;
}

double RewardModel::max_action_cost() const {
  return std::max({cost_analyse, cost_restore, cost_remove, cost_patch, cost_isolate,
                   cost_unisolate});
}

std::string host_ip(const ScenarioConfig& cfg, int host_index) {
  std::vector<std::string> subnet_names;
  for (const auto& [name, _] : cfg.subnets) subnet_names.push_back(name);
  std::sort(subnet_names.begin(), subnet_names.end());
  const auto& subnet = cfg.host(host_index).subnet;
  int s = 0;
  for (size_t i = 0; i < subnet_names.size(); ++i) {
    if (subnet_names[i] == subnet) s = static_cast<int>(i);
  }
  return "10.0." + std::to_string(16 + s) + "." + std::to_string(10 + host_index);
}

namespace {

constexpr const char* kRedIp = "10.0.250.9";

bool unix_flavor(int host_index) { return host_index % 2 == 1; }

void drop_exploit_artifacts(EnvState& state, int h) {
  bool nix = unix_flavor(h);
  state.hosts[h].suspicious_files.push_back(
      {nix ? "cmd.sh" : "cmd.exe", nix ? "/tmp/" : "C:\\temp\\", 0.9, false});
  state.hosts[h].suspicious_processes.push_back(
      {nix ? "shell.sh" : "shell.exe", nix ? "/tmp/" : "C:\\temp\\", 0.9, false,
       state.red_ip, 50000 + h});
}

void drop_escalate_artifacts(EnvState& state, int h) {
  bool nix = unix_flavor(h);
  state.hosts[h].suspicious_files.push_back(
      {nix ? "escalate.sh" : "escalate.exe", nix ? "/tmp/" : "C:\\temp\\", 0.9, false});
}

void advance_stage(EnvState& state, int h) {
  HostState& host = state.hosts[h];
  switch (host.compromise) {
    case Compromise::Clean:
      host.compromise = Compromise::Scanned;
      break;
    case Compromise::Scanned:
      if (host.decoy_patched) break;  // exploit success probability is zero
      host.compromise = Compromise::UserAccess;
      host.had_user_access = true;
      drop_exploit_artifacts(state, h);
      break;
    case Compromise::UserAccess:
      host.compromise = Compromise::Privileged;
      drop_escalate_artifacts(state, h);
      break;
    case Compromise::Privileged:
      break;
  }
}

/// The seeded entry host, or the next viable candidate (rotating from the
/// seeded one) once it is isolated or patched shut. -1 when every entry is
/// blocked.
int pick_entry(const ScenarioConfig& cfg, const EnvState& state) {
  const auto& entries = cfg.red_script.entry_hosts;
  if (entries.empty()) return -1;
  int start = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (cfg.host_index(entries[i]) == state.entry_host) start = static_cast<int>(i);
  }
  for (size_t k = 0; k < entries.size(); ++k) {
    int h = cfg.host_index(entries[(start + k) % entries.size()]);
    const HostState& hs = state.hosts[h];
    bool patched_shut = hs.decoy_patched && hs.compromise != Compromise::UserAccess &&
                        hs.compromise != Compromise::Privileged;
    if (!hs.isolated && !patched_shut) return h;
  }
  return -1;
}

/// Next hop toward the op server from the set of privileged footholds,
/// routing only through hosts the red agent can still use: not isolated, and
/// either already owned or not patched against exploitation. Returns -1 when
/// no such path exists.
int plan_next_hop(const ScenarioConfig& cfg, const EnvState& state,
                  const std::vector<std::vector<int>>& adj) {
  int op = cfg.op_server_index();
  auto traversable = [&](int h) {
    const HostState& hs = state.hosts[h];
    if (hs.isolated) return false;
    bool owned = hs.compromise == Compromise::UserAccess ||
                 hs.compromise == Compromise::Privileged;
    return owned || !hs.decoy_patched;
  };

  std::vector<int> parent(cfg.num_hosts(), -2);
  std::deque<int> queue;
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    if (state.hosts[h].compromise == Compromise::Privileged && !state.hosts[h].isolated) {
      parent[h] = -1;
      queue.push_back(h);
    }
  }
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    if (cur == op) {
      // Walk back to the first non-privileged node on the path.
      std::vector<int> path{cur};
      while (parent[path.back()] >= 0) path.push_back(parent[path.back()]);
      std::reverse(path.begin(), path.end());
      for (int node : path) {
        if (state.hosts[node].compromise != Compromise::Privileged) return node;
      }
      return -1;  // everything on the path already owned (op privileged)
    }
    for (int nb : adj[cur]) {
      if (parent[nb] == -2 && traversable(nb)) {
        parent[nb] = cur;
        queue.push_back(nb);
      }
    }
  }
  return -1;
}

}  // namespace

void red_act(const ScenarioConfig& cfg, const PriorityMap& pm, EnvState& state,
             std::mt19937_64& rng) {
  (void)pm;
  (void)rng;  // scripted red is deterministic beyond the seeded entry choice
  int op = cfg.op_server_index();
  if (state.hosts[op].compromise == Compromise::Privileged) return;  // objective held

  auto adj = cfg.adjacency();
  bool has_privileged = false;
  int escalating = -1;
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    if (state.hosts[h].compromise == Compromise::Privileged) has_privileged = true;
    if (state.hosts[h].compromise == Compromise::UserAccess && !state.hosts[h].isolated &&
        escalating < 0) {
      escalating = h;
    }
  }

  int target = -1;
  if (escalating >= 0) {
    // Finish escalating an existing user-level foothold first.
    target = escalating;
  } else if (!has_privileged) {
    // No presence yet: work the seeded entry host, or the next viable
    // candidate if it has been cut off.
    int entry = pick_entry(cfg, state);
    if (entry < 0) {
      state.red_target = -1;
      return;  // every entry blocked: stall
    }
    target = entry;
  } else {
    target = plan_next_hop(cfg, state, adj);
    if (target < 0) {
      state.red_target = -1;
      return;  // isolated off from the op server: stall
    }
  }

  if (state.hosts[target].isolated) {
    state.red_target = -1;
    return;
  }
  state.red_target = target;
  advance_stage(state, target);
}

EnvState reset_state(const ScenarioConfig& cfg, uint64_t seed) {
  EnvState state;
  state.hosts.assign(cfg.num_hosts(), HostState{});
  state.timestep = 0;
  state.rng.seed(seed);
  state.red_ip = kRedIp;
  state.last_action = {ActionKind::Monitor, -1};

  const auto& entries = cfg.red_script.entry_hosts;
  if (entries.empty()) {
    state.entry_host = -1;
  } else {
    std::uniform_int_distribution<size_t> pick(0, entries.size() - 1);
    state.entry_host = cfg.host_index(entries[pick(state.rng)]);
  }

  // The red agent's opening scan happens during reset, so episodes start with
  // the entry host Scanned and everything else Clean.
  if (state.entry_host >= 0) {
    PriorityMap pm;  // unused by red_act
    red_act(cfg, pm, state, state.rng);
  }
  return state;
}

Observation encode_observation(const ScenarioConfig& cfg, const EnvState& state,
                               const BlueAction& last_action) {
  Observation obs;
  obs.bits.assign(static_cast<size_t>(kObservationBitsPerHost) * cfg.num_hosts(), 0.0);
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    const HostState& hs = state.hosts[h];
    double* bits = &obs.bits[static_cast<size_t>(kObservationBitsPerHost) * h];
    bits[0] = hs.compromise != Compromise::Clean ? 1.0 : 0.0;
    // Live suspicious processes, not residual files: passive monitoring sees
    // active connections, while dropped files need an Analyse to surface.
    bits[1] = !hs.suspicious_processes.empty() ? 1.0 : 0.0;
    // Privilege escalation is loud enough to confirm passively; user-level
    // compromise needs an Analyse on the host to confirm.
    bool analysed = last_action.kind == ActionKind::Analyse && last_action.target == h;
    bool confirmed = hs.compromise == Compromise::Privileged ||
                     (analysed && hs.compromise == Compromise::UserAccess);
    bits[2] = confirmed ? 1.0 : 0.0;
    bits[3] = hs.isolated ? 1.0 : 0.0;
  }
  return obs;
}

GroundTruthSnapshot snapshot_of(const ScenarioConfig& cfg, const EnvState& state) {
  GroundTruthSnapshot snap;
  snap.timestep = state.timestep;
  snap.red_ip = state.red_ip;
  snap.hosts.reserve(cfg.num_hosts());
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    const HostState& hs = state.hosts[h];
    snap.hosts.push_back({cfg.host(h).id, cfg.host(h).generic_label, hs.compromise,
                          hs.isolated, hs.suspicious_files, hs.suspicious_processes,
                          hs.decoy_patched});
  }
  return snap;
}

double compute_reward(const ScenarioConfig& cfg, const PriorityMap& pm,
                      const RewardModel& rm, const EnvState& state,
                      const BlueAction& action) {
  double reward = rm.step_base;
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    double w = RewardModel::hop_weight(pm.hops_of(cfg.host(h).id));
    reward -= rm.severity(state.hosts[h].compromise) * w;
    if (state.hosts[h].isolated) reward -= rm.isolation_charge * w;
  }
  reward -= rm.action_cost(action.kind);
  return reward;
}

Environment::Environment(ScenarioConfig cfg, RewardModel reward)
    : cfg_(std::move(cfg)), priorities_(compute_priorities(cfg_)), reward_(reward) {}

Observation Environment::reset(uint64_t seed) {
  state_ = reset_state(cfg_, seed);
  return encode_observation(cfg_, state_, state_.last_action);
}

StepResult Environment::step_index(int action_index) {
  return step(BlueAction::from_index(action_index, cfg_.num_hosts()));
}

StepResult Environment::step(const BlueAction& action) {
  if (action.kind != ActionKind::Monitor &&
      (action.target < 0 || action.target >= cfg_.num_hosts())) {
    throw std::out_of_range("blue action target out of range");
  }

  red_act(cfg_, priorities_, state_, state_.rng);

  HostState* host = action.target >= 0 ? &state_.hosts[action.target] : nullptr;
  switch (action.kind) {
    case ActionKind::Analyse:
    case ActionKind::Monitor:
      break;
    case ActionKind::Restore:
      host->compromise = Compromise::Clean;
      host->suspicious_files.clear();
      host->suspicious_processes.clear();
      break;
    case ActionKind::Remove:
      if (host->compromise == Compromise::UserAccess) {
        host->compromise = Compromise::Scanned;
        host->suspicious_processes.clear();
      }
      break;
    case ActionKind::Patch:
      host->decoy_patched = true;
      break;
    case ActionKind::Isolate:
      host->isolated = true;
      break;
    case ActionKind::Unisolate:
      host->isolated = false;
      break;
  }

  state_.timestep += 1;
  state_.last_action = action;

  StepResult result;
  result.reward = compute_reward(cfg_, priorities_, reward_, state_, action);
  result.done = state_.timestep >= cfg_.episode_length;
  result.observation = encode_observation(cfg_, state_, action);
  result.info = snapshot_of(cfg_, state_);
  return result;
}

}  // namespace cyberteach
