#include "cyberteach/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cyberteach {

using nlohmann::json;

PolicyParams PolicyParams::create(int obs_dim, int n_actions,
                                  const std::vector<int>& hidden, uint64_t seed,
                                  bool zero_last_layer) {
  std::vector<int> actor_sizes{obs_dim};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(n_actions);
  std::vector<int> critic_sizes{obs_dim};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);

  PolicyParams p;
  p.actor = Mlp(actor_sizes, seed, zero_last_layer);
  p.critic = Mlp(critic_sizes, seed + 1, zero_last_layer);
  return p;
}

ForwardResult policy_forward(const PolicyParams& params, const std::vector<double>& obs) {
  ForwardResult out;
  out.probs = softmax(params.actor.forward(obs));
  out.value = params.critic.forward(obs)[0];
  return out;
}

void Trajectory::validate() const {
  size_t n = actions.size();
  if (observations.size() != n || behavior_log_probs.size() != n || rewards.size() != n ||
      values.size() != n || dones.size() != n) {
    throw std::invalid_argument("trajectory per-step lists have unequal lengths");
  }
  if (!teacher_signals.empty() && teacher_signals.size() != n) {
    throw std::invalid_argument("teacher signal list length mismatch");
  }
}

void TrainerConfig::validate() const {
  if (clip_ratio <= 0.0 || clip_ratio >= 1.0) {
    throw std::invalid_argument("clip_ratio must lie in (0, 1)");
  }
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (gae_lambda <= 0.0 || gae_lambda > 1.0) {
    throw std::invalid_argument("gae_lambda must lie in (0, 1]");
  }
  if (epochs < 1 || minibatch_size < 1 || training_interval_episodes < 1) {
    throw std::invalid_argument("epochs, minibatch_size and training interval must be >= 1");
  }
}

AdvantageResult compute_advantages(const Trajectory& traj, double gamma, double lam) {
  traj.validate();
  if (traj.size() == 0) throw std::invalid_argument("empty trajectory");

  size_t n = traj.size();
  AdvantageResult out;
  out.raw_advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);

  double gae = 0.0;
  for (size_t i = n; i-- > 0;) {
    double next_value = i + 1 < n ? traj.values[i + 1] : traj.bootstrap_value;
    double nonterminal = traj.dones[i] ? 0.0 : 1.0;
    double delta = traj.rewards[i] + gamma * next_value * nonterminal - traj.values[i];
    gae = delta + gamma * lam * nonterminal * gae;
    out.raw_advantages[i] = gae;
    out.returns[i] = gae + traj.values[i];
  }
  out.advantages = out.raw_advantages;
  normalize_in_place(out.advantages);
  return out;
}

void normalize_in_place(std::vector<double>& values) {
  if (values.empty()) return;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  double sd = std::sqrt(var);
  for (double& v : values) v = (v - mean) / (sd + 1e-8);
}

double clipped_surrogate(double advantage, double ratio, double clip_ratio) {
  double unclipped = -advantage * ratio;
  double clipped = -advantage * std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
  return std::max(unclipped, clipped);
}

double actor_loss_and_grad(const Mlp& actor, const std::vector<ActorSample>& samples,
                           const ActorLossCoefficients& coeffs, std::vector<double>* grad,
                           ActorLossBreakdown* breakdown) {
  if (samples.empty()) throw std::invalid_argument("no actor samples");
  double inv_n = 1.0 / static_cast<double>(samples.size());
  double ppo_sum = 0.0;
  double teacher_sum = 0.0;
  double entropy_sum = 0.0;

  Mlp::Cache cache;
  std::vector<double> dlogits(actor.output_size());
  for (const ActorSample& s : samples) {
    std::vector<double> logits = actor.forward_cached(*s.obs, cache);
    std::vector<double> probs = softmax(logits);
    int n_actions = static_cast<int>(probs.size());

    double log_pa = std::log(std::max(probs[s.action], coeffs.prob_floor));
    double ratio = std::exp(log_pa - s.behavior_log_prob);
    double unclipped = -s.advantage * ratio;
    double clipped = -s.advantage *
                     std::clamp(ratio, 1.0 - coeffs.clip_ratio, 1.0 + coeffs.clip_ratio);
    bool unclipped_active = unclipped >= clipped;
    ppo_sum += std::max(unclipped, clipped);

    double ent = entropy(probs);
    entropy_sum += ent;

    double teacher_term = 0.0;
    const TeacherSignal* teacher = s.teacher;
    if (coeffs.teacher_weight != 0.0 && teacher != nullptr) {
      if (teacher->mode == SignalMode::SingleAction) {
        teacher_term = -std::log(std::max(probs[teacher->action_index], coeffs.prob_floor));
      } else {
        for (int i = 0; i < n_actions; ++i) {
          double q = teacher->distribution[i];
          if (q <= 0.0) continue;
          teacher_term +=
              q * (std::log(q) - std::log(std::max(probs[i], coeffs.prob_floor)));
        }
      }
      teacher_sum += teacher_term;
    }

    if (grad != nullptr) {
      std::fill(dlogits.begin(), dlogits.end(), 0.0);

      if (coeffs.sigma != 0.0 && unclipped_active && probs[s.action] > coeffs.prob_floor) {
        double scale = -coeffs.sigma * s.advantage * ratio;
        for (int j = 0; j < n_actions; ++j) dlogits[j] += scale * -probs[j];
        dlogits[s.action] += scale;
      }

      if (coeffs.teacher_weight != 0.0 && teacher != nullptr) {
        if (teacher->mode == SignalMode::SingleAction) {
          int at = teacher->action_index;
          if (probs[at] > coeffs.prob_floor) {
            for (int j = 0; j < n_actions; ++j) {
              dlogits[j] += coeffs.teacher_weight * probs[j];
            }
            dlogits[at] -= coeffs.teacher_weight;
          }
        } else {
          double active_mass = 0.0;
          for (int t = 0; t < n_actions; ++t) {
            double q = teacher->distribution[t];
            if (q <= 0.0 || probs[t] <= coeffs.prob_floor) continue;
            active_mass += q;
            dlogits[t] -= coeffs.teacher_weight * q;
          }
          for (int j = 0; j < n_actions; ++j) {
            dlogits[j] += coeffs.teacher_weight * active_mass * probs[j];
          }
        }
      }

      if (coeffs.entropy_coef != 0.0) {
        // d(-c3 * H)/dlogit_j = c3 * p_j * (log p_j + H)
        for (int j = 0; j < n_actions; ++j) {
          if (probs[j] > 0.0) {
            dlogits[j] += coeffs.entropy_coef * probs[j] * (std::log(probs[j]) + ent);
          }
        }
      }

      for (double& g : dlogits) g *= inv_n;
      actor.backward(cache, dlogits, *grad);
    }
  }

  double ppo_mean = ppo_sum * inv_n;
  double teacher_mean = teacher_sum * inv_n;
  double entropy_mean = entropy_sum * inv_n;
  if (breakdown != nullptr) {
    breakdown->ppo = ppo_mean;
    breakdown->teacher = teacher_mean;
    breakdown->entropy = entropy_mean;
  }
  return coeffs.sigma * ppo_mean + coeffs.teacher_weight * teacher_mean -
         coeffs.entropy_coef * entropy_mean;
}

double critic_loss_and_grad(const Mlp& critic,
                            const std::vector<const std::vector<double>*>& obs,
                            const std::vector<double>& returns, std::vector<double>* grad) {
  if (obs.empty() || obs.size() != returns.size()) {
    throw std::invalid_argument("critic sample mismatch");
  }
  double inv_n = 1.0 / static_cast<double>(obs.size());
  double loss = 0.0;
  Mlp::Cache cache;
  for (size_t i = 0; i < obs.size(); ++i) {
    double v = critic.forward_cached(*obs[i], cache)[0];
    double err = v - returns[i];
    loss += err * err;
    if (grad != nullptr) {
      std::vector<double> dv{2.0 * err * inv_n};
      critic.backward(cache, dv, *grad);
    }
  }
  return loss * inv_n;
}

PpoTrainer::PpoTrainer(PolicyParams params, TrainerConfig cfg)
    : params_(std::move(params)), cfg_(std::move(cfg)),
      actor_opt_(params_.actor.param_count()), critic_opt_(params_.critic.param_count()),
      shuffle_rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ULL) {
  cfg_.validate();
}

UpdateDiagnostics PpoTrainer::update(const std::vector<Trajectory>& batch,
                                     const GuidanceTerm* guidance) {
  UpdateDiagnostics diag;
  if (static_cast<int>(batch.size()) != cfg_.training_interval_episodes) {
    throw std::invalid_argument("batch must cover exactly training_interval_episodes");
  }

  // Flatten, keeping raw advantages for batch-level normalization.
  std::vector<ActorSample> samples;
  std::vector<double> raw_adv;
  std::vector<double> returns;
  for (const Trajectory& traj : batch) {
    AdvantageResult adv = compute_advantages(traj, cfg_.gamma, cfg_.gae_lambda);
    for (size_t i = 0; i < traj.size(); ++i) {
      ActorSample s;
      s.obs = &traj.observations[i];
      s.action = traj.actions[i];
      s.behavior_log_prob = traj.behavior_log_probs[i];
      s.teacher = traj.teacher_signals.empty() ? nullptr : &traj.teacher_signals[i];
      samples.push_back(s);
      raw_adv.push_back(adv.raw_advantages[i]);
      returns.push_back(adv.returns[i]);
    }
  }
  normalize_in_place(raw_adv);
  for (size_t i = 0; i < samples.size(); ++i) samples[i].advantage = raw_adv[i];
  diag.samples = static_cast<int>(samples.size());

  ActorLossCoefficients coeffs;
  coeffs.clip_ratio = cfg_.clip_ratio;
  if (guidance != nullptr) {
    coeffs.teacher_weight = guidance->teacher_weight;
    coeffs.sigma = 1.0 - guidance->teacher_weight;
    coeffs.entropy_coef = guidance->entropy_coef;
  } else {
    coeffs.entropy_coef = cfg_.entropy_coef;
  }

  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> actor_grad(params_.actor.param_count());
  std::vector<double> critic_grad(params_.critic.param_count());
  int minibatches = 0;
  double loss_acc = 0.0, ppo_acc = 0.0, teacher_acc = 0.0, entropy_acc = 0.0,
         critic_acc = 0.0;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    size_t mb = std::min<size_t>(cfg_.minibatch_size, samples.size());
    for (size_t start = 0; start + mb <= order.size(); start += mb) {
      std::vector<ActorSample> mb_samples;
      std::vector<const std::vector<double>*> mb_obs;
      std::vector<double> mb_returns;
      mb_samples.reserve(mb);
      for (size_t k = start; k < start + mb; ++k) {
        mb_samples.push_back(samples[order[k]]);
        mb_obs.push_back(samples[order[k]].obs);
        mb_returns.push_back(returns[order[k]]);
      }

      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      ActorLossBreakdown breakdown;
      double actor_loss =
          actor_loss_and_grad(params_.actor, mb_samples, coeffs, &actor_grad, &breakdown);
      double critic_loss =
          critic_loss_and_grad(params_.critic, mb_obs, mb_returns, &critic_grad);

      bool finite = std::isfinite(actor_loss) && std::isfinite(critic_loss);
      for (size_t i = 0; finite && i < actor_grad.size(); ++i) {
        finite = std::isfinite(actor_grad[i]);
      }
      for (size_t i = 0; finite && i < critic_grad.size(); ++i) {
        finite = std::isfinite(critic_grad[i]);
      }
      if (!finite) {
        diag.aborted = true;
        std::ostringstream msg;
        msg << "non-finite loss or gradient at update " << update_count_ << " epoch "
            << epoch << " minibatch " << minibatches << " (actor=" << actor_loss
            << ", critic=" << critic_loss << ")";
        diag.abort_reason = msg.str();
        return diag;
      }

      actor_opt_.step(params_.actor.params(), actor_grad, cfg_.learning_rate);
      critic_opt_.step(params_.critic.params(), critic_grad, cfg_.learning_rate);

      loss_acc += actor_loss;
      ppo_acc += breakdown.ppo;
      teacher_acc += breakdown.teacher;
      entropy_acc += breakdown.entropy;
      critic_acc += critic_loss;
      minibatches += 1;
    }
  }

  update_count_ += 1;
  if (minibatches > 0) {
    diag.total_loss = loss_acc / minibatches;
    diag.ppo_loss = ppo_acc / minibatches;
    diag.teacher_loss = teacher_acc / minibatches;
    diag.entropy = entropy_acc / minibatches;
    diag.critic_loss = critic_acc / minibatches;
  }
  return diag;
}

namespace {

json mlp_to_json(const Mlp& mlp) {
  return json{{"layer_sizes", mlp.layer_sizes()}, {"params", mlp.params()}};
}

Mlp mlp_from_json(const json& doc) {
  Mlp mlp(doc.at("layer_sizes").get<std::vector<int>>(), 0);
  mlp.params() = doc.at("params").get<std::vector<double>>();
  return mlp;
}

json adam_to_json(const Adam& opt) {
  return json{{"m", opt.first_moment()}, {"v", opt.second_moment()}, {"t", opt.step_count()}};
}

}  // namespace

std::string PpoTrainer::checkpoint_text(const std::string& meta_json) const {
  json doc;
  doc["actor"] = mlp_to_json(params_.actor);
  doc["critic"] = mlp_to_json(params_.critic);
  doc["actor_opt"] = adam_to_json(actor_opt_);
  doc["critic_opt"] = adam_to_json(critic_opt_);
  doc["update_count"] = update_count_;
  doc["config"] = {{"learning_rate", cfg_.learning_rate},
                   {"clip_ratio", cfg_.clip_ratio},
                   {"gamma", cfg_.gamma},
                   {"gae_lambda", cfg_.gae_lambda},
                   {"epochs", cfg_.epochs},
                   {"minibatch_size", cfg_.minibatch_size},
                   {"training_interval_episodes", cfg_.training_interval_episodes},
                   {"entropy_coef", cfg_.entropy_coef},
                   {"hidden", cfg_.hidden},
                   {"seed", cfg_.seed}};
  doc["meta"] = json::parse(meta_json);
  return doc.dump();
}

PpoTrainer PpoTrainer::from_checkpoint_text(const std::string& text) {
  json doc = json::parse(text);
  TrainerConfig cfg;
  const json& c = doc.at("config");
  cfg.learning_rate = c.at("learning_rate").get<double>();
  cfg.clip_ratio = c.at("clip_ratio").get<double>();
  cfg.gamma = c.at("gamma").get<double>();
  cfg.gae_lambda = c.at("gae_lambda").get<double>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.minibatch_size = c.at("minibatch_size").get<int>();
  cfg.training_interval_episodes = c.at("training_interval_episodes").get<int>();
  cfg.entropy_coef = c.at("entropy_coef").get<double>();
  cfg.hidden = c.at("hidden").get<std::vector<int>>();
  cfg.seed = c.at("seed").get<uint64_t>();

  PolicyParams params;
  params.actor = mlp_from_json(doc.at("actor"));
  params.critic = mlp_from_json(doc.at("critic"));
  PpoTrainer trainer(std::move(params), cfg);
  trainer.actor_opt_.restore(doc.at("actor_opt").at("m").get<std::vector<double>>(),
                             doc.at("actor_opt").at("v").get<std::vector<double>>(),
                             doc.at("actor_opt").at("t").get<long>());
  trainer.critic_opt_.restore(doc.at("critic_opt").at("m").get<std::vector<double>>(),
                              doc.at("critic_opt").at("v").get<std::vector<double>>(),
                              doc.at("critic_opt").at("t").get<long>());
  trainer.update_count_ = doc.at("update_count").get<long>();
  return trainer;
}

std::string PpoTrainer::checkpoint_meta(const std::string& text) {
  return json::parse(text).at("meta").dump();
}

void PpoTrainer::save_checkpoint(const std::string& path, const std::string& meta_json) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << checkpoint_text(meta_json);
}

PpoTrainer PpoTrainer::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_checkpoint_text(buf.str());
}

}  // namespace cyberteach
