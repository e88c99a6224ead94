#include <set>
#include <stdexcept>

#include "cyberteach/env.hpp"
#include "cyberteach/topology.hpp"
#include "doctest.h"

using namespace cyberteach;

namespace {

ScenarioConfig two_host_scenario() {
  ScenarioConfig cfg;
  cfg.op_server = "Core";
  cfg.episode_length = 20;
  cfg.hosts.push_back({"Core", "host1", "s", true});
  cfg.hosts.push_back({"Edge", "host2", "s", true});
  cfg.subnets["s"] = {"Core", "Edge"};
  cfg.edges = {{"Core", "Edge"}};
  cfg.red_script.entry_hosts = {"Edge"};
  return cfg;
}

}  // namespace

TEST_CASE("flat action index layout is kind-major, host-minor") {
  int n = 13;
  CHECK(BlueAction::action_space_size(n) == 79);
  CHECK(BlueAction{ActionKind::Analyse, 0}.to_index(n) == 0);
  CHECK(BlueAction{ActionKind::Restore, 7}.to_index(n) == 13 + 7);
  CHECK(BlueAction{ActionKind::Monitor, -1}.to_index(n) == 78);
  for (int i = 0; i < 79; ++i) {
    CHECK(BlueAction::from_index(i, n).to_index(n) == i);
  }
  CHECK_THROWS_AS(BlueAction::from_index(79, n), std::out_of_range);
  CHECK_THROWS_AS(BlueAction::from_index(-1, n), std::out_of_range);
}

TEST_CASE("reset leaves the op server clean and the entry host scanned") {
  Environment env(default_scenario());
  env.reset(0);
  const EnvState& state = env.state();
  int op = env.config().op_server_index();
  CHECK(state.hosts[op].compromise == Compromise::Clean);
  CHECK(state.entry_host >= 0);
  CHECK(state.hosts[state.entry_host].compromise == Compromise::Scanned);
  int non_clean = 0;
  for (const auto& h : state.hosts) {
    if (h.compromise != Compromise::Clean) non_clean += 1;
  }
  CHECK(non_clean == 1);
}

TEST_CASE("same seed resets to a bit-identical state") {
  Environment a(default_scenario());
  Environment b(default_scenario());
  Observation oa = a.reset(1234);
  Observation ob = b.reset(1234);
  CHECK(oa.bits == ob.bits);
  CHECK(a.state().entry_host == b.state().entry_host);

  for (int i = 0; i < 30; ++i) {
    StepResult ra = a.step_index(i % a.action_space_size());
    StepResult rb = b.step_index(i % b.action_space_size());
    CHECK(ra.reward == rb.reward);
    CHECK(ra.observation.bits == rb.observation.bits);
    CHECK(ra.done == rb.done);
  }
}

TEST_CASE("distinct seeds spread red entries across the user subnet") {
  ScenarioConfig cfg = default_scenario();
  Environment env(cfg);
  std::set<int> entries;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    env.reset(seed);
    entries.insert(env.state().entry_host);
  }
  CHECK(entries.size() > 1);
  for (int e : entries) {
    const std::string& id = cfg.host(e).id;
    CHECK(std::find(cfg.red_script.entry_hosts.begin(), cfg.red_script.entry_hosts.end(),
                    id) != cfg.red_script.entry_hosts.end());
  }
}

TEST_CASE("reward formula on constructed states") {
  ScenarioConfig cfg = default_scenario();
  PriorityMap pm = compute_priorities(cfg);
  RewardModel rm;
  EnvState state;
  state.hosts.assign(cfg.num_hosts(), HostState{});

  SUBCASE("all clean plus Monitor earns exactly step_base") {
    CHECK(compute_reward(cfg, pm, rm, state, {ActionKind::Monitor, -1}) ==
          doctest::Approx(rm.step_base).epsilon(1e-12));
  }
  SUBCASE("privileged op server under Monitor costs exactly max_penalty") {
    state.hosts[cfg.op_server_index()].compromise = Compromise::Privileged;
    CHECK(compute_reward(cfg, pm, rm, state, {ActionKind::Monitor, -1}) ==
          doctest::Approx(rm.step_base - rm.max_penalty()).epsilon(1e-12));
  }
  SUBCASE("action costs subtract") {
    double base = compute_reward(cfg, pm, rm, state, {ActionKind::Monitor, -1});
    CHECK(compute_reward(cfg, pm, rm, state, {ActionKind::Restore, 0}) ==
          doctest::Approx(base - rm.cost_restore).epsilon(1e-12));
  }
}

TEST_CASE("out-of-range actions are rejected") {
  Environment env(default_scenario());
  env.reset(0);
  CHECK_THROWS_AS(env.step_index(env.action_space_size()), std::out_of_range);
  CHECK_THROWS_AS(env.step({ActionKind::Restore, 13}), std::out_of_range);
}

TEST_CASE("exhaustive two-host three-step enumeration") {
  // Oracle: walk every 3-action sequence on the smallest scenario and check
  // the action semantics on every transition.
  ScenarioConfig cfg = two_host_scenario();
  int n_actions = BlueAction::action_space_size(cfg.num_hosts());
  RewardModel rm;
  PriorityMap pm = compute_priorities(cfg);

  for (int a0 = 0; a0 < n_actions; ++a0) {
    for (int a1 = 0; a1 < n_actions; ++a1) {
      for (int a2 = 0; a2 < n_actions; ++a2) {
        Environment env(cfg, rm);
        env.reset(3);
        for (int action_index : {a0, a1, a2}) {
          BlueAction action = BlueAction::from_index(action_index, cfg.num_hosts());
          // State after the red move but before the blue action: recompute by
          // replaying red on a copy.
          EnvState pre = env.state();
          red_act(cfg, pm, pre, pre.rng);

          StepResult result = env.step(action);
          const EnvState& post = env.state();

          if (action.kind == ActionKind::Restore) {
            CHECK(post.hosts[action.target].compromise == Compromise::Clean);
            CHECK(post.hosts[action.target].suspicious_files.empty());
            CHECK(post.hosts[action.target].suspicious_processes.empty());
          }
          if (action.kind == ActionKind::Remove) {
            if (pre.hosts[action.target].compromise == Compromise::UserAccess) {
              CHECK(post.hosts[action.target].compromise == Compromise::Scanned);
            }
            if (pre.hosts[action.target].compromise == Compromise::Privileged) {
              CHECK(post.hosts[action.target].compromise == Compromise::Privileged);
            }
          }
          if (action.kind == ActionKind::Isolate) CHECK(post.hosts[action.target].isolated);
          if (action.kind == ActionKind::Unisolate) {
            CHECK_FALSE(post.hosts[action.target].isolated);
          }
          CHECK(result.reward ==
                doctest::Approx(compute_reward(cfg, pm, rm, post, action)).epsilon(1e-12));

          // Privileged only ever follows user access.
          for (const auto& h : post.hosts) {
            if (h.compromise == Compromise::Privileged) CHECK(h.had_user_access);
          }
        }
      }
    }
  }
}

TEST_CASE("red targets the op server once adjacent and privileged") {
  ScenarioConfig cfg = default_scenario();
  PriorityMap pm = compute_priorities(cfg);
  EnvState state = reset_state(cfg, 0);
  int gateway = cfg.host_index("Enterprise2");
  state.hosts[gateway].compromise = Compromise::Privileged;
  state.hosts[gateway].had_user_access = true;

  red_act(cfg, pm, state, state.rng);
  int op = cfg.op_server_index();
  CHECK(state.red_target == op);
  CHECK(state.hosts[op].compromise == Compromise::Scanned);
}

TEST_CASE("red re-plans around isolation or stalls, matching reachability") {
  ScenarioConfig cfg = default_scenario();
  PriorityMap pm = compute_priorities(cfg);

  // Red holds User1; Enterprise1 (its next hop) is isolated. A path through
  // is impossible: User1's only other neighbour is User0, a dead end, so the
  // reachability oracle says stall.
  EnvState state = reset_state(cfg, 0);
  for (auto& h : state.hosts) h = HostState{};
  int user1 = cfg.host_index("User1");
  state.hosts[user1].compromise = Compromise::Privileged;
  state.hosts[user1].had_user_access = true;
  state.hosts[cfg.host_index("Enterprise1")].isolated = true;

  EnvState before = state;
  red_act(cfg, pm, state, state.rng);
  CHECK(state.red_target == -1);
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    CHECK(state.hosts[h].compromise == before.hosts[h].compromise);
  }

  // Same but red also owns User2, which routes around via Enterprise1? No:
  // User2 also attaches to Enterprise1. Owning User3 opens Enterprise0.
  EnvState replan = before;
  int user3 = cfg.host_index("User3");
  replan.hosts[user3].compromise = Compromise::Privileged;
  replan.hosts[user3].had_user_access = true;
  red_act(cfg, pm, replan, replan.rng);
  CHECK(replan.red_target == cfg.host_index("Enterprise0"));
}

TEST_CASE("a fresh episode opens with a scan on the entry host") {
  ScenarioConfig cfg = default_scenario();
  PriorityMap pm = compute_priorities(cfg);
  EnvState state;
  state.hosts.assign(cfg.num_hosts(), HostState{});
  state.entry_host = cfg.host_index("User2");
  state.rng.seed(9);

  red_act(cfg, pm, state, state.rng);
  CHECK(state.red_target == state.entry_host);
  CHECK(state.hosts[state.entry_host].compromise == Compromise::Scanned);
}

TEST_CASE("observation encoding") {
  ScenarioConfig cfg = default_scenario();

  SUBCASE("all clean with Monitor is the zero vector") {
    EnvState state;
    state.hosts.assign(cfg.num_hosts(), HostState{});
    Observation obs = encode_observation(cfg, state, {ActionKind::Monitor, -1});
    for (double b : obs.bits) CHECK(b == 0.0);
  }
  SUBCASE("13-host scenario encodes 52 bits") {
    Environment env(cfg);
    CHECK(env.reset(0).size() == 52);
    CHECK(env.observation_size() == 52);
  }
  SUBCASE("isolation sets the per-host isolated bit") {
    EnvState state;
    state.hosts.assign(cfg.num_hosts(), HostState{});
    state.hosts[5].isolated = true;
    Observation obs = encode_observation(cfg, state, {ActionKind::Monitor, -1});
    CHECK(obs.bits[5 * kObservationBitsPerHost + 3] == 1.0);
  }
  SUBCASE("analyse reveals the confirmed bit for compromised hosts") {
    EnvState state;
    state.hosts.assign(cfg.num_hosts(), HostState{});
    state.hosts[2].compromise = Compromise::UserAccess;
    Observation with = encode_observation(cfg, state, {ActionKind::Analyse, 2});
    Observation without = encode_observation(cfg, state, {ActionKind::Monitor, -1});
    CHECK(with.bits[2 * kObservationBitsPerHost + 2] == 1.0);
    CHECK(without.bits[2 * kObservationBitsPerHost + 2] == 0.0);
  }
  SUBCASE("privilege escalation confirms passively") {
    EnvState state;
    state.hosts.assign(cfg.num_hosts(), HostState{});
    state.hosts[4].compromise = Compromise::Privileged;
    Observation obs = encode_observation(cfg, state, {ActionKind::Monitor, -1});
    CHECK(obs.bits[4 * kObservationBitsPerHost + 2] == 1.0);
  }
}

TEST_CASE("per-step reward stays within its bounds") {
  ScenarioConfig cfg = default_scenario();
  RewardModel rm;
  Environment env(cfg, rm);
  PriorityMap pm = env.priorities();
  double lo = rm.step_base - rm.max_total_penalty(cfg, pm) - rm.max_action_cost();
  double hi = rm.step_base;

  std::mt19937_64 rng(5);
  for (int episode = 0; episode < 3; ++episode) {
    env.reset(episode);
    for (int step = 0; step < cfg.episode_length; ++step) {
      StepResult r = env.step_index(static_cast<int>(rng() % env.action_space_size()));
      CHECK(r.reward >= lo - 1e-12);
      CHECK(r.reward <= hi + 1e-12);
      if (r.done) break;
    }
  }
}

TEST_CASE("an unopposed red owns the op server within the hop bound") {
  ScenarioConfig cfg = default_scenario();
  Environment env(cfg);
  PriorityMap pm = env.priorities();
  for (uint64_t seed = 0; seed < 10; ++seed) {
    env.reset(seed);
    int entry = env.state().entry_host;
    int entry_hops = pm.hops_of(cfg.host(entry).id);
    int bound = entry_hops * 3 + 3;

    int owned_at = -1;
    for (int step = 1; step <= bound; ++step) {
      env.step({ActionKind::Monitor, -1});
      if (env.state().hosts[cfg.op_server_index()].compromise == Compromise::Privileged) {
        owned_at = step;
        break;
      }
    }
    CHECK(owned_at > 0);
    CHECK(owned_at <= bound);
  }
}

TEST_CASE("remove never clears privileged, restore always cleans") {
  ScenarioConfig cfg = default_scenario();
  Environment env(cfg);
  std::mt19937_64 rng(17);
  env.reset(2);
  for (int step = 0; step < 200; ++step) {
    int target = static_cast<int>(rng() % cfg.num_hosts());
    bool was_priv = env.state().hosts[target].compromise == Compromise::Privileged;
    ActionKind kind = step % 2 == 0 ? ActionKind::Remove : ActionKind::Restore;
    env.step({kind, target});
    if (kind == ActionKind::Remove && was_priv) {
      CHECK(env.state().hosts[target].compromise == Compromise::Privileged);
    }
    if (kind == ActionKind::Restore) {
      CHECK(env.state().hosts[target].compromise == Compromise::Clean);
    }
    if (env.state().timestep >= cfg.episode_length) env.reset(env.state().timestep + step);
  }
}

TEST_CASE("patched hosts cannot be exploited") {
  ScenarioConfig cfg = two_host_scenario();
  Environment env(cfg);
  env.reset(3);
  int edge = cfg.host_index("Edge");
  REQUIRE(env.state().entry_host == edge);

  // Red exploits the entry while the patch lands; the restore then wipes the
  // foothold. With its only entry patched shut, red stalls for good.
  env.step({ActionKind::Patch, edge});
  env.step({ActionKind::Restore, edge});
  CHECK(env.state().hosts[edge].decoy_patched);
  for (int i = 0; i < 10; ++i) env.step({ActionKind::Monitor, -1});
  CHECK(env.state().hosts[edge].compromise == Compromise::Clean);
  CHECK(env.state().hosts[cfg.op_server_index()].compromise == Compromise::Clean);
}

TEST_CASE("episode terminates exactly at episode_length") {
  ScenarioConfig cfg = two_host_scenario();
  Environment env(cfg);
  env.reset(0);
  for (int step = 1; step <= cfg.episode_length; ++step) {
    StepResult r = env.step({ActionKind::Monitor, -1});
    CHECK(r.done == (step == cfg.episode_length));
  }
}
