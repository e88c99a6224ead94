#pragma once

#include <string>
#include <vector>

#include "cyberteach/env.hpp"
#include "cyberteach/teacher.hpp"

namespace cyberteach {

enum class Technique {
  FeatureReward,        // one-hot state augmentation + shaped rewards
  FeatureMask,          // one-hot state augmentation + inference-only masking
  MaskAuxSingle,        // inference-only masking + log-likelihood auxiliary loss
  MaskAuxDistribution,  // inference-only masking + KL auxiliary loss
  None,                 // plain PPO baseline
};

const char* technique_name(Technique t);
Technique technique_from_name(const std::string& name);
bool technique_uses_feature(Technique t);
bool technique_uses_mask(Technique t);
bool technique_uses_aux(Technique t);
SignalMode technique_signal_mode(Technique t);

/// Time-varying guidance coefficients. All decay is stepwise at training
/// interval boundaries; the schedule state is a pure function of the number
/// of completed episodes.
struct GuidanceSchedule {
  Technique technique = Technique::None;
  double c1_initial = 2.5;
  double c1_host = 1.0;
  double c1_decay_factor = 0.9;
  double mask_decay_step = 0.25;
  double aux_decay_step = 0.25;
  int decay_start_episode = 32;
  int decay_interval_episodes = 8;
  double entropy_up_step = 5e-4;
  double entropy_down_step = 2.5e-4;

  void validate() const;
};

struct GuidanceState {
  double teacher_weight = 1.0;  // the (1 - sigma) coefficient of the auxiliary loss
  double mask_strength = 1.0;   // c2 = 1 - mask_strength
  double c1_current = 2.5;
  double c1_host_current = 1.0;
  double c3_current = 0.0;
  bool teacher_active = true;

  double c2() const { return 1.0 - mask_strength; }
};

/// State of the schedule after `episodes_completed` episodes. Pure and exact:
/// weights are single multiply-subtract expressions so the zero crossings are
/// bit-precise.
GuidanceState schedule_state(const GuidanceSchedule& sched, long episodes_completed,
                             double c3_initial);

/// Spec-shaped wrapper over schedule_state (the previous state argument only
/// asserts the monotone-episode precondition).
GuidanceState advance_schedule(const GuidanceState& prev, long episode,
                               const GuidanceSchedule& sched, double c3_initial);

/// obs ++ onehot(teacher action). SingleAction signals only.
std::vector<double> augment_observation(const Observation& obs, const TeacherSignal& signal,
                                        int action_space);

/// env reward + c1 on an exact match, + c1_host on a same-host match.
double shape_reward(double env_reward, const BlueAction& action, const TeacherSignal& signal,
                    const GuidanceState& gs, int n_hosts);

/// Inference-only mask: multiply by M (1 at the teacher action, c2 elsewhere;
/// distribution teachers interpolate M between 1 and their max-normalized
/// distribution), then renormalize. Sampling only, never the loss.
std::vector<double> mask_policy(const std::vector<double>& policy, const TeacherSignal& signal,
                                const GuidanceState& gs);

/// -log pi(teacher action) for single recommendations, KL(teacher || pi) for
/// distributions. Probabilities inside logs are floored at kProbFloor.
double teacher_loss(const std::vector<double>& policy, const TeacherSignal& signal);

inline constexpr double kProbFloor = 1e-8;

}  // namespace cyberteach
