#include <cmath>
#include <random>
#include <stdexcept>

#include "cyberteach/guidance.hpp"
#include "cyberteach/ppo.hpp"
#include "doctest.h"

using namespace cyberteach;

namespace {

std::vector<double> random_simplex(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unit(1e-6, 1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = unit(rng);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

GuidanceState state_with_mask(double mask_strength) {
  GuidanceState gs;
  gs.mask_strength = mask_strength;
  return gs;
}

}  // namespace

TEST_CASE("observation augmentation appends the one-hot recommendation") {
  Observation obs;
  obs.bits = {1.0, 0.0, 1.0};

  SUBCASE("suffix is the one-hot vector") {
    std::vector<double> out = augment_observation(obs, TeacherSignal::single(3), 5);
    REQUIRE(out.size() == 8);
    std::vector<double> expected{1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    CHECK(out == expected);
  }
  SUBCASE("52-bit observation with 79 actions augments to 131") {
    Observation wide;
    wide.bits.assign(52, 0.0);
    CHECK(augment_observation(wide, TeacherSignal::single(0), 79).size() == 131);
  }
  SUBCASE("different recommendations differ in exactly two suffix positions") {
    std::vector<double> a = augment_observation(obs, TeacherSignal::single(1), 5);
    std::vector<double> b = augment_observation(obs, TeacherSignal::single(4), 5);
    int diff = 0;
    for (size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i] ? 1 : 0;
    CHECK(diff == 2);
  }
  SUBCASE("distribution signals are rejected") {
    TeacherSignal dist = TeacherSignal::from_distribution({0.5, 0.5, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(augment_observation(obs, dist, 5), std::invalid_argument);
  }
}

TEST_CASE("reward shaping follows the match cases") {
  int n_hosts = 13;
  GuidanceState gs;
  gs.c1_current = 2.5;
  gs.c1_host_current = 1.0;
  BlueAction teacher_action{ActionKind::Restore, 7};
  TeacherSignal signal = TeacherSignal::single(teacher_action.to_index(n_hosts));

  SUBCASE("exact match adds c1") {
    CHECK(shape_reward(-3.0, teacher_action, signal, gs, n_hosts) ==
          doctest::Approx(-0.5));
  }
  SUBCASE("same host, different action adds c1_host") {
    BlueAction same_host{ActionKind::Analyse, 7};
    CHECK(shape_reward(2.0, same_host, signal, gs, n_hosts) == doctest::Approx(3.0));
  }
  SUBCASE("no match leaves the reward unchanged") {
    BlueAction other{ActionKind::Restore, 2};
    CHECK(shape_reward(2.0, other, signal, gs, n_hosts) == doctest::Approx(2.0));
  }
  SUBCASE("zero c1 is the identity") {
    gs.c1_current = 0.0;
    gs.c1_host_current = 0.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> r(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
      double reward = r(rng);
      BlueAction action = BlueAction::from_index(static_cast<int>(rng() % 79), n_hosts);
      CHECK(shape_reward(reward, action, signal, gs, n_hosts) == reward);
    }
  }
}

TEST_CASE("masking follows the hard and soft cases") {
  SUBCASE("hard mask forces the teacher action") {
    std::vector<double> masked =
        mask_policy({0.5, 0.5}, TeacherSignal::single(0), state_with_mask(1.0));
    CHECK(masked == std::vector<double>{1.0, 0.0});
  }
  SUBCASE("soft mask renormalizes") {
    // c2 = 0.5: (0.4 * 1, 0.6 * 0.5) -> (4/7, 3/7).
    std::vector<double> masked =
        mask_policy({0.4, 0.6}, TeacherSignal::single(0), state_with_mask(0.5));
    CHECK(masked[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    CHECK(masked[1] == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
  }
  SUBCASE("c2 = 1 returns the input vector exactly") {
    std::vector<double> policy{0.25, 0.3, 0.45};
    CHECK(mask_policy(policy, TeacherSignal::single(1), state_with_mask(0.0)) == policy);
  }
  SUBCASE("zero probability under a hard mask falls back to the teacher one-hot") {
    std::vector<double> masked =
        mask_policy({1.0, 0.0}, TeacherSignal::single(1), state_with_mask(1.0));
    CHECK(masked == std::vector<double>{0.0, 1.0});
  }
  SUBCASE("one-hot teacher distributions degenerate to the single-action mask") {
    TeacherSignal onehot = TeacherSignal::from_distribution({0.0, 1.0, 0.0});
    TeacherSignal single = TeacherSignal::single(1);
    std::vector<double> policy{0.2, 0.3, 0.5};
    GuidanceState gs = state_with_mask(0.6);
    CHECK(mask_policy(policy, onehot, gs) == mask_policy(policy, single, gs));
  }
}

TEST_CASE("fuzzed masks stay valid distributions") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    int n = 2 + static_cast<int>(rng() % 12);
    std::vector<double> policy = random_simplex(rng, n);
    GuidanceState gs = state_with_mask(unit(rng));
    TeacherSignal signal = trial % 2 == 0
                               ? TeacherSignal::single(static_cast<int>(rng() % n))
                               : TeacherSignal::from_distribution(random_simplex(rng, n));
    std::vector<double> masked = mask_policy(policy, signal, gs);
    double sum = 0.0;
    for (double p : masked) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("teacher loss: log-likelihood and KL") {
  SUBCASE("perfect single-action agreement is zero loss") {
    CHECK(teacher_loss({0.0, 1.0}, TeacherSignal::single(1)) == doctest::Approx(0.0));
  }
  SUBCASE("half probability costs ln 2") {
    CHECK(teacher_loss({0.5, 0.5}, TeacherSignal::single(0)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("identical distributions have zero KL") {
    std::vector<double> p{0.2, 0.3, 0.5};
    CHECK(teacher_loss(p, TeacherSignal::from_distribution(p)) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("KL is non-negative over random pairs") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 2000; ++i) {
      int n = 2 + static_cast<int>(rng() % 10);
      std::vector<double> policy = random_simplex(rng, n);
      std::vector<double> teacher = random_simplex(rng, n);
      CHECK(teacher_loss(policy, TeacherSignal::from_distribution(teacher)) >= -1e-12);
    }
  }
  SUBCASE("zero policy probability is floored, not infinite") {
    double loss = teacher_loss({1.0, 0.0}, TeacherSignal::single(1));
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-std::log(kProbFloor)));
  }
}

TEST_CASE("schedule hits zero influence exactly at episode 64") {
  GuidanceSchedule sched;  // Table-style defaults: start 32, interval 8, steps 0.25
  sched.technique = Technique::MaskAuxDistribution;
  double c3_initial = 1e-3;

  GuidanceState at63 = schedule_state(sched, 63, c3_initial);
  CHECK(at63.teacher_weight > 0.0);
  CHECK(at63.mask_strength > 0.0);
  CHECK(at63.teacher_active);

  GuidanceState at64 = schedule_state(sched, 64, c3_initial);
  CHECK(at64.teacher_weight == 0.0);
  CHECK(at64.mask_strength == 0.0);
  CHECK_FALSE(at64.teacher_active);

  // c3 has risen by exactly four up-steps at the transition point.
  CHECK(at64.c3_current - c3_initial == 4 * 5e-4);
}

TEST_CASE("schedule is unchanged before the decay start") {
  GuidanceSchedule sched;
  sched.technique = Technique::MaskAuxSingle;
  for (long e : {0L, 1L, 8L, 31L, 32L, 39L}) {
    GuidanceState gs = schedule_state(sched, e, 2e-3);
    CHECK(gs.teacher_weight == 1.0);
    CHECK(gs.mask_strength == 1.0);
    CHECK(gs.teacher_active);
    if (e < 8) {
      CHECK(gs.c1_current == doctest::Approx(2.5));
      CHECK(gs.c1_host_current == doctest::Approx(1.0));
    }
  }
  GuidanceState first_decay = schedule_state(sched, 40, 2e-3);
  CHECK(first_decay.teacher_weight == doctest::Approx(0.75));
  CHECK(first_decay.c3_current == doctest::Approx(2e-3 + 5e-4));
}

TEST_CASE("entropy coefficient rises per decay event then falls back") {
  GuidanceSchedule sched;
  sched.technique = Technique::MaskAuxDistribution;
  double c3_initial = 1e-3;

  // Two decay events by episode 48.
  CHECK(schedule_state(sched, 48, c3_initial).c3_current ==
        doctest::Approx(c3_initial + 2 * 5e-4));
  // After the transition the coefficient steps down per interval, clamped at
  // its initial value.
  CHECK(schedule_state(sched, 72, c3_initial).c3_current ==
        doctest::Approx(c3_initial + 4 * 5e-4 - 2.5e-4));
  CHECK(schedule_state(sched, 64 + 8 * 100, c3_initial).c3_current ==
        doctest::Approx(c3_initial));
}

TEST_CASE("c1 decays 10 percent per training interval from the start") {
  GuidanceSchedule sched;
  sched.technique = Technique::FeatureReward;
  CHECK(schedule_state(sched, 0, 0.0).c1_current == doctest::Approx(2.5));
  CHECK(schedule_state(sched, 7, 0.0).c1_current == doctest::Approx(2.5));
  CHECK(schedule_state(sched, 8, 0.0).c1_current == doctest::Approx(2.5 * 0.9));
  CHECK(schedule_state(sched, 80, 0.0).c1_current ==
        doctest::Approx(2.5 * std::pow(0.9, 10)));
  CHECK(schedule_state(sched, 8, 0.0).c1_host_current == doctest::Approx(0.9));
}

TEST_CASE("schedule weights are monotone in the episode counter") {
  GuidanceSchedule sched;
  sched.technique = Technique::MaskAuxDistribution;
  sched.decay_start_episode = 8;
  GuidanceState prev = schedule_state(sched, 0, 1e-3);
  for (long e = 1; e <= 120; ++e) {
    GuidanceState cur = advance_schedule(prev, e, sched, 1e-3);
    CHECK(cur.teacher_weight <= prev.teacher_weight + 1e-12);
    CHECK(cur.mask_strength <= prev.mask_strength + 1e-12);
    CHECK(cur.c2() >= prev.c2() - 1e-12);
    prev = cur;
  }
  CHECK_THROWS_AS(advance_schedule(prev, 0, sched, 1e-3), std::invalid_argument);
}

TEST_CASE("masking is inference-only: loss gradients ignore it") {
  // Hold the sampled actions fixed and compare gradients computed for a batch
  // whose actions came from masked sampling vs the same batch unmasked. The
  // mask may only change which actions get sampled; here they are identical
  // by construction, so the gradients must match bit for bit.
  Mlp actor({4, 8, 5}, 17);
  std::mt19937_64 rng(18);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::vector<double>> obs_storage;
  std::vector<TeacherSignal> signals;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> obs(4);
    for (double& v : obs) v = gauss(rng);
    obs_storage.push_back(obs);
    signals.push_back(TeacherSignal::single(static_cast<int>(rng() % 5)));
  }

  GuidanceState gs = state_with_mask(0.7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Path 1: sample through the mask, record the batch the way the training
  // loop does (unmasked behavior log-probabilities).
  std::vector<int> actions;
  std::vector<ActorSample> samples_masked;
  std::vector<double> advantages;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> probs = softmax(actor.forward(obs_storage[i]));
    std::vector<double> masked = mask_policy(probs, signals[i], gs);
    double u = unit(rng);
    int action = 0;
    double acc = 0.0;
    for (size_t k = 0; k < masked.size(); ++k) {
      acc += masked[k];
      if (u < acc) {
        action = static_cast<int>(k);
        break;
      }
    }
    actions.push_back(action);
    advantages.push_back(gauss(rng));

    ActorSample s;
    s.obs = &obs_storage[i];
    s.action = action;
    s.behavior_log_prob = std::log(std::max(probs[action], kProbFloor));
    s.advantage = advantages[i];
    s.teacher = &signals[i];
    samples_masked.push_back(s);
  }

  // Path 2: no mask_policy call anywhere; the same actions held fixed.
  std::vector<ActorSample> samples_plain;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> probs = softmax(actor.forward(obs_storage[i]));
    ActorSample s;
    s.obs = &obs_storage[i];
    s.action = actions[i];
    s.behavior_log_prob = std::log(std::max(probs[actions[i]], kProbFloor));
    s.advantage = advantages[i];
    s.teacher = &signals[i];
    samples_plain.push_back(s);
  }

  for (int i = 0; i < 6; ++i) {
    CHECK(samples_masked[i].behavior_log_prob == samples_plain[i].behavior_log_prob);
  }

  ActorLossCoefficients coeffs;
  coeffs.sigma = 0.75;
  coeffs.teacher_weight = 0.25;
  coeffs.entropy_coef = 0.01;

  std::vector<double> grad_masked(actor.param_count(), 0.0);
  double loss_masked = actor_loss_and_grad(actor, samples_masked, coeffs, &grad_masked);
  std::vector<double> grad_plain(actor.param_count(), 0.0);
  double loss_plain = actor_loss_and_grad(actor, samples_plain, coeffs, &grad_plain);

  CHECK(loss_masked == loss_plain);
  CHECK(grad_masked == grad_plain);
}
