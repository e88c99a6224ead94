#include <cmath>
#include <random>
#include <stdexcept>

#include "cyberteach/ppo.hpp"
#include "doctest.h"

using namespace cyberteach;

namespace {

/// Direct double-loop GAE: advantage_t = sum_k (gamma*lambda)^k * delta_{t+k},
/// cutting the sum at terminal steps.
std::vector<double> gae_oracle(const Trajectory& traj, double gamma, double lam) {
  size_t n = traj.size();
  std::vector<double> delta(n);
  for (size_t t = 0; t < n; ++t) {
    double next_value = t + 1 < n ? traj.values[t + 1] : traj.bootstrap_value;
    double nonterminal = traj.dones[t] ? 0.0 : 1.0;
    delta[t] = traj.rewards[t] + gamma * next_value * nonterminal - traj.values[t];
  }
  std::vector<double> adv(n, 0.0);
  for (size_t t = 0; t < n; ++t) {
    double factor = 1.0;
    for (size_t k = t; k < n; ++k) {
      adv[t] += factor * delta[k];
      if (traj.dones[k]) break;
      factor *= gamma * lam;
    }
  }
  return adv;
}

struct GradCheckSetup {
  Mlp actor;
  std::vector<std::vector<double>> observations;
  std::vector<TeacherSignal> signals;
  std::vector<ActorSample> samples;
};

GradCheckSetup make_grad_setup(uint64_t seed, SignalMode mode, int n_samples = 6) {
  GradCheckSetup setup;
  int obs_dim = 6;
  int n_actions = 4;
  setup.actor = Mlp({obs_dim, 8, n_actions}, seed);

  std::mt19937_64 rng(seed * 77 + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  setup.observations.reserve(n_samples);
  setup.signals.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    std::vector<double> obs(obs_dim);
    for (double& v : obs) v = gauss(rng);
    setup.observations.push_back(obs);

    if (mode == SignalMode::SingleAction) {
      setup.signals.push_back(
          TeacherSignal::single(static_cast<int>(rng() % n_actions)));
    } else {
      std::vector<double> q(n_actions);
      double sum = 0.0;
      for (double& v : q) {
        v = 0.05 + unit(rng);
        sum += v;
      }
      for (double& v : q) v /= sum;
      setup.signals.push_back(TeacherSignal::from_distribution(q));
    }
  }
  for (int i = 0; i < n_samples; ++i) {
    std::vector<double> probs = softmax(setup.actor.forward(setup.observations[i]));
    int action = static_cast<int>(rng() % n_actions);

    // Keep the importance ratio away from the clip kinks so the loss is
    // differentiable at the probe point.
    double u = 0.0;
    double ratio = 1.0;
    do {
      u = (unit(rng) - 0.5) * 0.3;
      ratio = std::exp(-u);
    } while (std::abs(ratio - 0.8) < 5e-3 || std::abs(ratio - 1.2) < 5e-3);

    ActorSample s;
    s.obs = &setup.observations[i];
    s.action = action;
    s.behavior_log_prob = std::log(std::max(probs[action], 1e-12)) + u;
    s.advantage = gauss(rng);
    s.teacher = &setup.signals[i];
    setup.samples.push_back(s);
  }
  return setup;
}

void check_actor_gradient(GradCheckSetup& setup, const ActorLossCoefficients& coeffs) {
  std::vector<double> grad(setup.actor.param_count(), 0.0);
  actor_loss_and_grad(setup.actor, setup.samples, coeffs, &grad);

  const double eps = 1e-5;
  std::vector<double>& params = setup.actor.params();
  for (size_t p = 0; p < params.size(); ++p) {
    double saved = params[p];
    params[p] = saved + eps;
    double hi = actor_loss_and_grad(setup.actor, setup.samples, coeffs, nullptr);
    params[p] = saved - eps;
    double lo = actor_loss_and_grad(setup.actor, setup.samples, coeffs, nullptr);
    params[p] = saved;
    double fd = (hi - lo) / (2.0 * eps);
    double denom = std::max({1.0, std::abs(fd), std::abs(grad[p])});
    CHECK(std::abs(fd - grad[p]) / denom < 1e-4);
  }
}

}  // namespace

TEST_CASE("zero-initialized final layer yields the uniform distribution") {
  PolicyParams params = PolicyParams::create(5, 7, {16}, 3, /*zero_last_layer=*/true);
  std::vector<double> obs{0.3, -1.0, 0.5, 2.0, -0.2};
  ForwardResult fw = policy_forward(params, obs);
  for (double p : fw.probs) CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-12));
}

TEST_CASE("policy distributions sum to one") {
  PolicyParams params = PolicyParams::create(4, 9, {12, 12}, 11);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> obs(4);
    for (double& v : obs) v = gauss(rng);
    ForwardResult fw = policy_forward(params, obs);
    double sum = 0.0;
    for (double p : fw.probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("entropy of the uniform distribution is ln N") {
  for (int n : {2, 5, 79}) {
    std::vector<double> uniform(n, 1.0 / n);
    CHECK(entropy(uniform) == doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-12));
  }
}

TEST_CASE("dimension mismatch is rejected") {
  PolicyParams params = PolicyParams::create(5, 3, {8}, 1);
  CHECK_THROWS_AS(policy_forward(params, std::vector<double>(4, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("advantages: bandit-style constant steps are all equal pre-normalization") {
  Trajectory traj;
  for (int i = 0; i < 6; ++i) {
    traj.observations.push_back({1.0});
    traj.actions.push_back(0);
    traj.behavior_log_probs.push_back(-0.7);
    traj.rewards.push_back(2.0);
    traj.values.push_back(0.5);
    traj.dones.push_back(1);  // each step terminal
  }
  AdvantageResult adv = compute_advantages(traj, 1.0, 1.0);
  for (double a : adv.raw_advantages) CHECK(a == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("advantages: single-step base case") {
  Trajectory traj;
  traj.observations.push_back({1.0});
  traj.actions.push_back(0);
  traj.behavior_log_probs.push_back(-0.1);
  traj.rewards.push_back(0.3);
  traj.values.push_back(0.9);
  traj.dones.push_back(0);
  traj.bootstrap_value = 1.7;
  double gamma = 0.97;
  AdvantageResult adv = compute_advantages(traj, gamma, 0.9);
  CHECK(adv.raw_advantages[0] ==
        doctest::Approx(0.3 + gamma * 1.7 - 0.9).epsilon(1e-12));
  CHECK(adv.returns[0] == doctest::Approx(adv.raw_advantages[0] + 0.9).epsilon(1e-12));
}

TEST_CASE("advantages match the double-loop oracle on random trajectories") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory traj;
    int n = 10;
    for (int i = 0; i < n; ++i) {
      traj.observations.push_back({gauss(rng)});
      traj.actions.push_back(0);
      traj.behavior_log_probs.push_back(-1.0);
      traj.rewards.push_back(gauss(rng));
      traj.values.push_back(gauss(rng));
      traj.dones.push_back(i == 4 && trial % 2 == 0 ? 1 : (i == n - 1 ? 1 : 0));
    }
    traj.bootstrap_value = gauss(rng);
    double gamma = 0.9 + 0.1 * (trial % 2);
    double lam = 0.8 + 0.2 * (trial % 2);

    AdvantageResult adv = compute_advantages(traj, gamma, lam);
    std::vector<double> oracle = gae_oracle(traj, gamma, lam);
    for (int i = 0; i < n; ++i) {
      CHECK(adv.raw_advantages[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
    }

    double mean = 0.0;
    for (double a : adv.advantages) mean += a;
    mean /= n;
    CHECK(std::abs(mean) < 1e-9);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  SUBCASE("plain PPO with entropy") {
    for (uint64_t seed : {1u, 2u, 3u}) {
      GradCheckSetup setup = make_grad_setup(seed, SignalMode::SingleAction);
      ActorLossCoefficients coeffs;
      coeffs.sigma = 1.0;
      coeffs.teacher_weight = 0.0;
      coeffs.entropy_coef = 0.01;
      check_actor_gradient(setup, coeffs);
    }
  }
  SUBCASE("log-likelihood teacher term") {
    for (uint64_t seed : {4u, 5u}) {
      GradCheckSetup setup = make_grad_setup(seed, SignalMode::SingleAction);
      ActorLossCoefficients coeffs;
      coeffs.sigma = 0.75;
      coeffs.teacher_weight = 0.25;
      coeffs.entropy_coef = 0.005;
      check_actor_gradient(setup, coeffs);
    }
  }
  SUBCASE("KL teacher term") {
    for (uint64_t seed : {6u, 7u}) {
      GradCheckSetup setup = make_grad_setup(seed, SignalMode::Distribution);
      ActorLossCoefficients coeffs;
      coeffs.sigma = 0.5;
      coeffs.teacher_weight = 0.5;
      coeffs.entropy_coef = 0.01;
      check_actor_gradient(setup, coeffs);
    }
  }
  SUBCASE("pure distillation") {
    GradCheckSetup setup = make_grad_setup(8, SignalMode::SingleAction);
    ActorLossCoefficients coeffs;
    coeffs.sigma = 0.0;
    coeffs.teacher_weight = 1.0;
    coeffs.entropy_coef = 0.002;
    check_actor_gradient(setup, coeffs);
  }
}

TEST_CASE("critic gradient matches finite differences") {
  Mlp critic({5, 8, 1}, 21);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> obs_storage;
  std::vector<double> returns;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> obs(5);
    for (double& v : obs) v = gauss(rng);
    obs_storage.push_back(obs);
    returns.push_back(gauss(rng));
  }
  std::vector<const std::vector<double>*> obs;
  for (const auto& o : obs_storage) obs.push_back(&o);

  std::vector<double> grad(critic.param_count(), 0.0);
  critic_loss_and_grad(critic, obs, returns, &grad);
  const double eps = 1e-5;
  for (size_t p = 0; p < critic.param_count(); ++p) {
    double saved = critic.params()[p];
    critic.params()[p] = saved + eps;
    double hi = critic_loss_and_grad(critic, obs, returns, nullptr);
    critic.params()[p] = saved - eps;
    double lo = critic_loss_and_grad(critic, obs, returns, nullptr);
    critic.params()[p] = saved;
    double fd = (hi - lo) / (2.0 * eps);
    double denom = std::max({1.0, std::abs(fd), std::abs(grad[p])});
    CHECK(std::abs(fd - grad[p]) / denom < 1e-4);
  }
}

TEST_CASE("per-sample surrogate never exceeds the clipped bound") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> advantage(-3.0, 3.0);
  std::uniform_real_distribution<double> ratio_dist(0.0, 3.0);
  double clip = 0.2;
  for (int i = 0; i < 10000; ++i) {
    double adv = advantage(rng);
    double ratio = ratio_dist(rng);
    double surrogate = clipped_surrogate(adv, ratio, clip);
    double clipped_obj = adv * std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    // The objective contribution (-surrogate) is capped by the clipped value.
    CHECK(-surrogate <= clipped_obj + 1e-12);
    CHECK(surrogate >= -adv * ratio - 1e-12);
  }
  CHECK(clipped_surrogate(1.0, 2.0, 0.2) == doctest::Approx(-1.2));
  CHECK(clipped_surrogate(-1.0, 0.5, 0.2) == doctest::Approx(0.8));
}

namespace {

std::vector<Trajectory> make_fixed_batch(int episodes, int steps, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Trajectory> batch;
  for (int e = 0; e < episodes; ++e) {
    Trajectory traj;
    for (int s = 0; s < steps; ++s) {
      std::vector<double> obs(4);
      for (double& v : obs) v = gauss(rng);
      traj.observations.push_back(obs);
      traj.actions.push_back(static_cast<int>(rng() % 3));
      traj.behavior_log_probs.push_back(-1.1);
      traj.rewards.push_back(gauss(rng));
      traj.values.push_back(gauss(rng));
      traj.dones.push_back(s == steps - 1 ? 1 : 0);
    }
    batch.push_back(std::move(traj));
  }
  return batch;
}

}  // namespace

TEST_CASE("updates are bit-stable for a fixed seed and batch") {
  TrainerConfig cfg;
  cfg.training_interval_episodes = 4;
  cfg.minibatch_size = 16;
  cfg.epochs = 3;
  cfg.hidden = {12};
  cfg.seed = 99;

  std::vector<Trajectory> batch = make_fixed_batch(4, 12, 5);
  PpoTrainer a(PolicyParams::create(4, 3, cfg.hidden, cfg.seed), cfg);
  PpoTrainer b(PolicyParams::create(4, 3, cfg.hidden, cfg.seed), cfg);
  a.update(batch);
  b.update(batch);
  CHECK(a.params().actor.params() == b.params().actor.params());
  CHECK(a.params().critic.params() == b.params().critic.params());
}

TEST_CASE("update requires exactly the training interval of episodes") {
  TrainerConfig cfg;
  cfg.training_interval_episodes = 8;
  PpoTrainer trainer(PolicyParams::create(4, 3, {8}, 0), cfg);
  std::vector<Trajectory> batch = make_fixed_batch(3, 4, 1);
  CHECK_THROWS_AS(trainer.update(batch), std::invalid_argument);
}

TEST_CASE("ragged trajectories are rejected") {
  Trajectory traj;
  traj.observations = {{1.0}, {2.0}};
  traj.actions = {0};  // shorter than observations
  traj.behavior_log_probs = {-0.5};
  traj.rewards = {1.0};
  traj.values = {0.0};
  traj.dones = {1};
  CHECK_THROWS_AS(traj.validate(), std::invalid_argument);
  CHECK_THROWS_AS(compute_advantages(traj, 0.99, 0.95), std::invalid_argument);
}

TEST_CASE("config validation rejects out-of-range values") {
  TrainerConfig cfg;
  cfg.clip_ratio = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainerConfig{};
  cfg.gamma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainerConfig{};
  cfg.gae_lambda = 1.2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("plain PPO solves a two-state bandit") {
  // Two observations, each with its own rewarding action; every episode is a
  // single step.
  TrainerConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.training_interval_episodes = 8;
  cfg.minibatch_size = 8;
  cfg.epochs = 2;
  cfg.hidden = {16};
  cfg.entropy_coef = 1e-3;
  cfg.seed = 7;

  PpoTrainer trainer(PolicyParams::create(2, 2, cfg.hidden, cfg.seed), cfg);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> states{{1.0, 0.0}, {0.0, 1.0}};
  int updates = 0;
  for (; updates < 500; ++updates) {
    std::vector<Trajectory> batch;
    for (int e = 0; e < cfg.training_interval_episodes; ++e) {
      const std::vector<double>& obs = states[e % 2];
      ForwardResult fw = policy_forward(trainer.params(), obs);
      double u = unit(rng);
      int action = u < fw.probs[0] ? 0 : 1;
      int optimal = e % 2;
      double reward = action == optimal ? 1.0 : 0.0;

      Trajectory traj;
      traj.observations.push_back(obs);
      traj.actions.push_back(action);
      traj.behavior_log_probs.push_back(std::log(std::max(fw.probs[action], 1e-12)));
      traj.rewards.push_back(reward);
      traj.values.push_back(fw.value);
      traj.dones.push_back(1);
      batch.push_back(std::move(traj));
    }
    UpdateDiagnostics diag = trainer.update(batch);
    REQUIRE_FALSE(diag.aborted);

    double p0 = policy_forward(trainer.params(), states[0]).probs[0];
    double p1 = policy_forward(trainer.params(), states[1]).probs[1];
    if (p0 > 0.95 && p1 > 0.95) break;
  }
  CHECK(updates < 500);
}

TEST_CASE("checkpoints round-trip parameters and counters") {
  TrainerConfig cfg;
  cfg.training_interval_episodes = 2;
  cfg.hidden = {10};
  cfg.seed = 41;
  PpoTrainer trainer(PolicyParams::create(4, 3, cfg.hidden, cfg.seed), cfg);
  trainer.update(make_fixed_batch(2, 6, 3));

  std::string text = trainer.checkpoint_text(R"({"note": "fixture"})");
  PpoTrainer restored = PpoTrainer::from_checkpoint_text(text);
  CHECK(restored.params().actor.params() == trainer.params().actor.params());
  CHECK(restored.params().critic.params() == trainer.params().critic.params());
  CHECK(restored.update_count() == trainer.update_count());
  CHECK(PpoTrainer::checkpoint_meta(text).find("fixture") != std::string::npos);
}
