#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cyberteach/nn.hpp"
#include "cyberteach/teacher.hpp"

namespace cyberteach {

/// Actor maps observation -> logits over the flat action space; critic maps
/// observation -> scalar value. Both are seedable and independently owned.
struct PolicyParams {
  Mlp actor;
  Mlp critic;

  static PolicyParams create(int obs_dim, int n_actions, const std::vector<int>& hidden,
                             uint64_t seed, bool zero_last_layer = false);
  int obs_dim() const { return actor.input_size(); }
  int n_actions() const { return actor.output_size(); }
};

struct ForwardResult {
  std::vector<double> probs;
  double value = 0.0;
};

ForwardResult policy_forward(const PolicyParams& params, const std::vector<double>& obs);

/// One rollout segment. `behavior_log_probs` are the *unmasked* policy
/// log-probabilities of the sampled actions: masking biases sampling only and
/// must never leak into the loss.
struct Trajectory {
  std::vector<std::vector<double>> observations;
  std::vector<int> actions;
  std::vector<double> behavior_log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<uint8_t> dones;
  std::vector<TeacherSignal> teacher_signals;  // empty, or one per step
  double bootstrap_value = 0.0;                // value of the state after the last step

  size_t size() const { return actions.size(); }
  void validate() const;  // throws on ragged lengths
};

struct TrainerConfig {
  double learning_rate = 3e-4;
  double clip_ratio = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatch_size = 256;
  int training_interval_episodes = 8;
  double entropy_coef = 1e-3;  // c3 initial value
  std::vector<int> hidden = {64, 64};
  uint64_t seed = 0;

  void validate() const;
};

struct AdvantageResult {
  std::vector<double> raw_advantages;  // exact GAE recursion
  std::vector<double> advantages;      // normalized (zero mean, unit variance)
  std::vector<double> returns;         // raw advantage + value
};

AdvantageResult compute_advantages(const Trajectory& traj, double gamma, double lam);
void normalize_in_place(std::vector<double>& values);

/// Auxiliary-loss configuration for a guided update. `teacher_weight` is the
/// (1 - sigma) coefficient of the teacher term; `entropy_coef` the current c3.
struct GuidanceTerm {
  double teacher_weight = 0.0;
  double entropy_coef = 1e-3;
};

struct UpdateDiagnostics {
  double total_loss = 0.0;
  double ppo_loss = 0.0;
  double teacher_loss = 0.0;
  double entropy = 0.0;
  double critic_loss = 0.0;
  int samples = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// One flattened sample for the actor loss.
struct ActorSample {
  const std::vector<double>* obs = nullptr;
  int action = 0;
  double behavior_log_prob = 0.0;
  double advantage = 0.0;
  const TeacherSignal* teacher = nullptr;
};

struct ActorLossCoefficients {
  double sigma = 1.0;           // weight of the clipped PPO term
  double teacher_weight = 0.0;  // weight of the teacher term (1 - sigma)
  double entropy_coef = 0.0;    // c3
  double clip_ratio = 0.2;
  double prob_floor = 1e-8;  // clamp inside logs
};

struct ActorLossBreakdown {
  double ppo = 0.0;
  double teacher = 0.0;
  double entropy = 0.0;
};

/// Mean combined actor loss over `samples`:
///   sigma * L_clip + teacher_weight * L_teacher - entropy_coef * H(pi).
/// When `grad` is non-null the exact analytic gradient is accumulated into it
/// (this is the function the finite-difference checks probe).
double actor_loss_and_grad(const Mlp& actor, const std::vector<ActorSample>& samples,
                           const ActorLossCoefficients& coeffs, std::vector<double>* grad,
                           ActorLossBreakdown* breakdown = nullptr);

/// Mean squared return error; analytic gradient accumulated when non-null.
double critic_loss_and_grad(const Mlp& critic,
                            const std::vector<const std::vector<double>*>& obs,
                            const std::vector<double>& returns, std::vector<double>* grad);

/// Per-sample clipped surrogate contribution (exposed for property tests).
double clipped_surrogate(double advantage, double ratio, double clip_ratio);

class PpoTrainer {
 public:
  PpoTrainer(PolicyParams params, TrainerConfig cfg);

  /// Runs one update over exactly training_interval_episodes trajectories.
  /// A null guidance term means plain PPO (entropy from the config).
  UpdateDiagnostics update(const std::vector<Trajectory>& batch,
                           const GuidanceTerm* guidance = nullptr);

  const PolicyParams& params() const { return params_; }
  PolicyParams& mutable_params() { return params_; }
  const TrainerConfig& config() const { return cfg_; }
  long update_count() const { return update_count_; }

  std::string checkpoint_text(const std::string& meta_json = "{}") const;
  static PpoTrainer from_checkpoint_text(const std::string& text);
  static std::string checkpoint_meta(const std::string& text);
  void save_checkpoint(const std::string& path, const std::string& meta_json = "{}") const;
  static PpoTrainer load_checkpoint(const std::string& path);

 private:
  PolicyParams params_;
  TrainerConfig cfg_;
  Adam actor_opt_;
  Adam critic_opt_;
  std::mt19937_64 shuffle_rng_;
  long update_count_ = 0;
};

}  // namespace cyberteach
