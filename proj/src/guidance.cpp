#include "cyberteach/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cyberteach {

const char* technique_name(Technique t) {
  switch (t) {
    case Technique::FeatureReward: return "feature-reward";
    case Technique::FeatureMask: return "feature-mask";
    case Technique::MaskAuxSingle: return "mask-aux-single";
    case Technique::MaskAuxDistribution: return "mask-aux-distribution";
    case Technique::None: return "none";
  }
  return "?";
}

Technique technique_from_name(const std::string& name) {
  for (Technique t : {Technique::FeatureReward, Technique::FeatureMask,
                      Technique::MaskAuxSingle, Technique::MaskAuxDistribution,
                      Technique::None}) {
    if (name == technique_name(t)) return t;
  }
  throw std::invalid_argument("unknown technique: " + name);
}

bool technique_uses_feature(Technique t) {
  return t == Technique::FeatureReward || t == Technique::FeatureMask;
}

bool technique_uses_mask(Technique t) {
  return t == Technique::FeatureMask || t == Technique::MaskAuxSingle ||
         t == Technique::MaskAuxDistribution;
}

bool technique_uses_aux(Technique t) {
  return t == Technique::MaskAuxSingle || t == Technique::MaskAuxDistribution;
}

SignalMode technique_signal_mode(Technique t) {
  return t == Technique::MaskAuxDistribution ? SignalMode::Distribution
                                             : SignalMode::SingleAction;
}

void GuidanceSchedule::validate() const {
  if (mask_decay_step < 0.0 || aux_decay_step < 0.0 || entropy_up_step < 0.0 ||
      entropy_down_step < 0.0) {
    throw std::invalid_argument("schedule steps must be >= 0");
  }
  if (c1_decay_factor < 0.0 || c1_decay_factor > 1.0) {
    throw std::invalid_argument("c1_decay_factor must lie in [0, 1]");
  }
  if (decay_interval_episodes < 1) {
    throw std::invalid_argument("decay_interval_episodes must be >= 1");
  }
}

namespace {

long decay_events(long episodes_completed, int start, int interval) {
  if (episodes_completed < start + interval) return 0;
  return (episodes_completed - start) / interval;
}

/// Number of decay events before a weight starting at 1 reaches 0.
long events_to_zero(double step) {
  if (step <= 0.0) return 0;  // never decays
  return static_cast<long>(std::ceil(1.0 / step));
}

}  // namespace

GuidanceState schedule_state(const GuidanceSchedule& sched, long episodes_completed,
                             double c3_initial) {
  sched.validate();
  GuidanceState gs;
  gs.c3_current = c3_initial;

  long n = decay_events(episodes_completed, sched.decay_start_episode,
                        sched.decay_interval_episodes);
  gs.teacher_weight = std::max(0.0, 1.0 - static_cast<double>(n) * sched.aux_decay_step);
  gs.mask_strength = std::max(0.0, 1.0 - static_cast<double>(n) * sched.mask_decay_step);
  gs.teacher_active = gs.teacher_weight > 0.0 || gs.mask_strength > 0.0;

  long c1_intervals = std::max<long>(0, episodes_completed / sched.decay_interval_episodes);
  double c1_factor = std::pow(sched.c1_decay_factor, static_cast<double>(c1_intervals));
  gs.c1_current = sched.c1_initial * c1_factor;
  gs.c1_host_current = sched.c1_host * c1_factor;

  if (technique_uses_aux(sched.technique)) {
    long aux_zero = events_to_zero(sched.aux_decay_step);
    long mask_zero = events_to_zero(sched.mask_decay_step);
    long active_events = std::max(aux_zero, mask_zero);
    long ups = std::min(n, active_events);
    gs.c3_current = c3_initial + static_cast<double>(ups) * sched.entropy_up_step;
    if (n > active_events && active_events > 0) {
      long downs = n - active_events;
      double decayed =
          gs.c3_current - static_cast<double>(downs) * sched.entropy_down_step;
      gs.c3_current = std::max(c3_initial, decayed);
    }
  }
  return gs;
}

GuidanceState advance_schedule(const GuidanceState& prev, long episode,
                               const GuidanceSchedule& sched, double c3_initial) {
  GuidanceState next = schedule_state(sched, episode, c3_initial);
  if (next.teacher_weight > prev.teacher_weight + 1e-12 ||
      next.mask_strength > prev.mask_strength + 1e-12) {
    throw std::invalid_argument("episode counter must be non-decreasing");
  }
  return next;
}

std::vector<double> augment_observation(const Observation& obs, const TeacherSignal& signal,
                                        int action_space) {
  if (signal.mode != SignalMode::SingleAction) {
    throw std::invalid_argument("feature augmentation requires a single-action signal");
  }
  if (signal.action_index < 0 || signal.action_index >= action_space) {
    throw std::invalid_argument("teacher action index out of range");
  }
  std::vector<double> out = obs.bits;
  out.resize(obs.bits.size() + action_space, 0.0);
  out[obs.bits.size() + signal.action_index] = 1.0;
  return out;
}

double shape_reward(double env_reward, const BlueAction& action, const TeacherSignal& signal,
                    const GuidanceState& gs, int n_hosts) {
  if (signal.mode != SignalMode::SingleAction) {
    throw std::invalid_argument("reward shaping requires a single-action signal");
  }
  BlueAction teacher = BlueAction::from_index(signal.action_index, n_hosts);
  if (action == teacher) return env_reward + gs.c1_current;
  if (action.target >= 0 && teacher.target >= 0 && action.target == teacher.target) {
    return env_reward + gs.c1_host_current;
  }
  return env_reward;
}

std::vector<double> mask_policy(const std::vector<double>& policy, const TeacherSignal& signal,
                                const GuidanceState& gs) {
  double c2 = gs.c2();
  if (c2 >= 1.0) return policy;  // identity mask

  size_t n = policy.size();
  std::vector<double> mask(n, c2);
  if (signal.mode == SignalMode::SingleAction) {
    if (signal.action_index < 0 || signal.action_index >= static_cast<int>(n)) {
      throw std::invalid_argument("teacher action index out of range");
    }
    mask[signal.action_index] = 1.0;
  } else {
    if (signal.distribution.size() != n) {
      throw std::invalid_argument("teacher distribution size mismatch");
    }
    double peak = *std::max_element(signal.distribution.begin(), signal.distribution.end());
    if (peak <= 0.0) throw std::invalid_argument("teacher distribution has no mass");
    for (size_t i = 0; i < n; ++i) {
      mask[i] = c2 + (1.0 - c2) * (signal.distribution[i] / peak);
    }
  }

  std::vector<double> masked(n);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    masked[i] = policy[i] * mask[i];
    sum += masked[i];
  }
  if (sum <= 0.0) {
    // Hard mask over a zero-probability recommendation: fall back to the
    // teacher's one-hot so sampling stays well defined.
    std::fill(masked.begin(), masked.end(), 0.0);
    masked[signal.argmax()] = 1.0;
    return masked;
  }
  for (double& v : masked) v /= sum;
  return masked;
}

double teacher_loss(const std::vector<double>& policy, const TeacherSignal& signal) {
  if (signal.mode == SignalMode::SingleAction) {
    if (signal.action_index < 0 || signal.action_index >= static_cast<int>(policy.size())) {
      throw std::invalid_argument("teacher action index out of range");
    }
    return -std::log(std::max(policy[signal.action_index], kProbFloor));
  }
  if (signal.distribution.size() != policy.size()) {
    throw std::invalid_argument("teacher distribution size mismatch");
  }
  double kl = 0.0;
  for (size_t i = 0; i < policy.size(); ++i) {
    double q = signal.distribution[i];
    if (q <= 0.0) continue;
    kl += q * (std::log(q) - std::log(std::max(policy[i], kProbFloor)));
  }
  return kl;
}

}  // namespace cyberteach
