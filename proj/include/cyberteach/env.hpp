#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cyberteach/topology.hpp"

namespace cyberteach {

enum class Compromise { Clean = 0, Scanned = 1, UserAccess = 2, Privileged = 3 };

const char* compromise_name(Compromise c);

struct FileArtifact {
  std::string name;
  std::string path;
  double density = 0.0;  // in [0, 1]
  bool is_signed = false;
};

struct ProcessArtifact {
  std::string name;
  std::string path;
  double density = 0.0;
  bool is_signed = false;
  std::string remote_ip;
  int port = 0;  // in [1, 65535]
};

struct HostState {
  Compromise compromise = Compromise::Clean;
  bool isolated = false;
  std::vector<FileArtifact> suspicious_files;
  std::vector<ProcessArtifact> suspicious_processes;
  bool decoy_patched = false;
  bool had_user_access = false;  // episode-scoped; backs the Privileged invariant
};

enum class ActionKind {
  Analyse = 0,
  Restore = 1,
  Remove = 2,
  Patch = 3,
  Isolate = 4,
  Unisolate = 5,
  Monitor = 6,
};
inline constexpr int kTargetedActionKinds = 6;

const char* action_kind_name(ActionKind k);

/// Flat index layout is kind-major, host-minor: the six targeted kinds span
/// [kind * n_hosts, kind * n_hosts + n_hosts), Monitor sits last.
struct BlueAction {
  ActionKind kind = ActionKind::Monitor;
  int target = -1;  // host index; -1 for Monitor

  static int action_space_size(int n_hosts) { return kTargetedActionKinds * n_hosts + 1; }
  static BlueAction from_index(int index, int n_hosts);
  int to_index(int n_hosts) const;
  bool operator==(const BlueAction& other) const = default;
};

/// 4 features per host, host-major: activity-detected, compromise-suspected
/// (live suspicious processes), compromise-confirmed (privilege escalation,
/// or user-level access surfaced by an Analyse), isolated.
struct Observation {
  std::vector<double> bits;
  int size() const { return static_cast<int>(bits.size()); }
};
inline constexpr int kObservationBitsPerHost = 4;

struct HostSnapshot {
  std::string id;
  std::string generic_label;
  Compromise compromise = Compromise::Clean;
  bool isolated = false;
  std::vector<FileArtifact> suspicious_files;
  std::vector<ProcessArtifact> suspicious_processes;
  bool decoy_patched = false;
};

/// Ground truth handed to teachers and diagnostics; never fed to the policy.
struct GroundTruthSnapshot {
  int timestep = 0;
  std::string red_ip;
  std::vector<HostSnapshot> hosts;  // scenario host order
};

struct EnvState {
  std::vector<HostState> hosts;
  int timestep = 0;
  int entry_host = -1;
  int red_target = -1;
  std::string red_ip;
  BlueAction last_action;
  std::mt19937_64 rng;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  GroundTruthSnapshot info;
};

/// Per-step reward: step_base - sum of per-host penalties - action cost.
/// Host penalty = severity(compromise) * 1/(1+hops), so the op server
/// (0 hops) dominates, plus a small availability charge for isolation.
struct RewardModel {
  double step_base = 1.0;
  double severity_scanned = 0.02;
  double severity_user = 0.25;
  double severity_priv = 0.50;
  double isolation_charge = 0.18;  // self-inflicted availability loss
  double cost_analyse = 0.02;
  double cost_restore = 0.80;  // full reimage, by far the most disruptive action
  double cost_remove = 0.10;
  double cost_patch = 0.05;
  double cost_isolate = 0.10;
  double cost_unisolate = 0.05;

  double severity(Compromise c) const;
  double action_cost(ActionKind k) const;
  static double hop_weight(int hops) { return 1.0 / (1.0 + hops); }
  /// Largest single-host penalty: the op server at Privileged.
  double max_penalty() const { return severity_priv; }
  double max_total_penalty(const ScenarioConfig& cfg, const PriorityMap& pm) const;
  double max_action_cost() const;
};

// Free-function step machinery (the Environment class below wraps these).
EnvState reset_state(const ScenarioConfig& cfg, uint64_t seed);
void red_act(const ScenarioConfig& cfg, const PriorityMap& pm, EnvState& state,
             std::mt19937_64& rng);
Observation encode_observation(const ScenarioConfig& cfg, const EnvState& state,
                               const BlueAction& last_action);
GroundTruthSnapshot snapshot_of(const ScenarioConfig& cfg, const EnvState& state);
double compute_reward(const ScenarioConfig& cfg, const PriorityMap& pm,
                      const RewardModel& rm, const EnvState& state,
                      const BlueAction& action);

/// Deterministic per-host address used in prompts; stable per scenario.
std::string host_ip(const ScenarioConfig& cfg, int host_index);

class Environment {
 public:
  Environment(ScenarioConfig cfg, RewardModel reward = {});

  Observation reset(uint64_t seed);
  StepResult step(const BlueAction& action);
  StepResult step_index(int action_index);

  int observation_size() const { return kObservationBitsPerHost * cfg_.num_hosts(); }
  int action_space_size() const { return BlueAction::action_space_size(cfg_.num_hosts()); }
  const ScenarioConfig& config() const { return cfg_; }
  const PriorityMap& priorities() const { return priorities_; }
  const RewardModel& reward_model() const { return reward_; }
  const EnvState& state() const { return state_; }
  EnvState& mutable_state() { return state_; }
  GroundTruthSnapshot snapshot() const { return snapshot_of(cfg_, state_); }

 private:
  ScenarioConfig cfg_;
  PriorityMap priorities_;
  RewardModel reward_;
  EnvState state_;
};

}  // namespace cyberteach
