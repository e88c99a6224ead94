#include "cyberteach/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace cyberteach {

using nlohmann::json;

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t run_seed_of(uint64_t seed_base, int run_index) {
  return splitmix64(seed_base * 0x100000001b3ULL + static_cast<uint64_t>(run_index));
}

int sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : line) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  return parts;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (teacher_kind != "scripted" && teacher_kind != "llm") {
    throw std::invalid_argument("teacher kind must be scripted or llm");
  }
  trainer.validate();
  schedule.validate();
}

ScenarioConfig resolve_scenario(const std::string& name) {
  if (name == "builtin:default") return default_scenario();
  if (name == "builtin:reduced") return reduced_scenario();
  return load_scenario(name);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json doc = json::parse(text);
  ExperimentConfig cfg;
  cfg.scenario = doc.value("scenario", cfg.scenario);
  if (doc.contains("technique")) {
    cfg.technique = technique_from_name(doc.at("technique").get<std::string>());
  }
  cfg.n_runs = doc.value("n_runs", cfg.n_runs);
  cfg.episodes = doc.value("episodes", cfg.episodes);
  cfg.seed_base = doc.value("seed_base", cfg.seed_base);
  cfg.workers = doc.value("workers", cfg.workers);
  cfg.output_dir = doc.value("output_dir", cfg.output_dir);
  cfg.expert_temperature = doc.value("expert_temperature", cfg.expert_temperature);

  if (doc.contains("trainer")) {
    const json& t = doc.at("trainer");
    cfg.trainer.learning_rate = t.value("learning_rate", cfg.trainer.learning_rate);
    cfg.trainer.clip_ratio = t.value("clip_ratio", cfg.trainer.clip_ratio);
    cfg.trainer.gamma = t.value("gamma", cfg.trainer.gamma);
    cfg.trainer.gae_lambda = t.value("gae_lambda", cfg.trainer.gae_lambda);
    cfg.trainer.epochs = t.value("epochs", cfg.trainer.epochs);
    cfg.trainer.minibatch_size = t.value("minibatch_size", cfg.trainer.minibatch_size);
    cfg.trainer.training_interval_episodes =
        t.value("training_interval_episodes", cfg.trainer.training_interval_episodes);
    cfg.trainer.entropy_coef = t.value("entropy_coef", cfg.trainer.entropy_coef);
    if (t.contains("hidden")) cfg.trainer.hidden = t.at("hidden").get<std::vector<int>>();
  }
  if (doc.contains("schedule")) {
    const json& s = doc.at("schedule");
    cfg.schedule.c1_initial = s.value("c1_initial", cfg.schedule.c1_initial);
    cfg.schedule.c1_host = s.value("c1_host", cfg.schedule.c1_host);
    cfg.schedule.c1_decay_factor = s.value("c1_decay_factor", cfg.schedule.c1_decay_factor);
    cfg.schedule.mask_decay_step = s.value("mask_decay_step", cfg.schedule.mask_decay_step);
    cfg.schedule.aux_decay_step = s.value("aux_decay_step", cfg.schedule.aux_decay_step);
    cfg.schedule.decay_start_episode =
        s.value("decay_start_episode", cfg.schedule.decay_start_episode);
    cfg.schedule.decay_interval_episodes =
        s.value("decay_interval_episodes", cfg.schedule.decay_interval_episodes);
    cfg.schedule.entropy_up_step = s.value("entropy_up_step", cfg.schedule.entropy_up_step);
    cfg.schedule.entropy_down_step =
        s.value("entropy_down_step", cfg.schedule.entropy_down_step);
  }
  if (doc.contains("reward")) {
    const json& r = doc.at("reward");
    cfg.reward.step_base = r.value("step_base", cfg.reward.step_base);
    cfg.reward.severity_scanned = r.value("severity_scanned", cfg.reward.severity_scanned);
    cfg.reward.severity_user = r.value("severity_user", cfg.reward.severity_user);
    cfg.reward.severity_priv = r.value("severity_priv", cfg.reward.severity_priv);
    cfg.reward.isolation_charge = r.value("isolation_charge", cfg.reward.isolation_charge);
    cfg.reward.cost_analyse = r.value("cost_analyse", cfg.reward.cost_analyse);
    cfg.reward.cost_restore = r.value("cost_restore", cfg.reward.cost_restore);
    cfg.reward.cost_remove = r.value("cost_remove", cfg.reward.cost_remove);
    cfg.reward.cost_patch = r.value("cost_patch", cfg.reward.cost_patch);
    cfg.reward.cost_isolate = r.value("cost_isolate", cfg.reward.cost_isolate);
    cfg.reward.cost_unisolate = r.value("cost_unisolate", cfg.reward.cost_unisolate);
  }
  if (doc.contains("teacher")) {
    const json& t = doc.at("teacher");
    cfg.teacher_kind = t.value("kind", cfg.teacher_kind);
    if (t.contains("format")) {
      cfg.llm.format = prompt_format_from_name(t.at("format").get<std::string>());
    }
    cfg.llm.fallback_to_expert = t.value("fallback_to_expert", cfg.llm.fallback_to_expert);
    cfg.llm.token_floor = t.value("token_floor", cfg.llm.token_floor);
    cfg.llm.marginal_temperature =
        t.value("marginal_temperature", cfg.llm.marginal_temperature);
    if (t.contains("endpoint")) {
      const json& e = t.at("endpoint");
      cfg.llm.endpoint.base_url = e.value("base_url", cfg.llm.endpoint.base_url);
      cfg.llm.endpoint.model = e.value("model", cfg.llm.endpoint.model);
      cfg.llm.endpoint.temperature = e.value("temperature", cfg.llm.endpoint.temperature);
      cfg.llm.endpoint.max_tokens = e.value("max_tokens", cfg.llm.endpoint.max_tokens);
      cfg.llm.endpoint.logprobs = e.value("logprobs", cfg.llm.endpoint.logprobs);
      cfg.llm.endpoint.top_logprobs =
          e.value("top_logprobs", cfg.llm.endpoint.top_logprobs);
      cfg.llm.endpoint.timeout_seconds =
          e.value("timeout_seconds", cfg.llm.endpoint.timeout_seconds);
      cfg.llm.endpoint.cache_enabled = e.value("cache_enabled", cfg.llm.endpoint.cache_enabled);
      cfg.llm.endpoint.cache_dir = e.value("cache_dir", cfg.llm.endpoint.cache_dir);
      cfg.llm.endpoint.api_key_env = e.value("api_key_env", cfg.llm.endpoint.api_key_env);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

RunResult run_training(const ScenarioConfig& scenario, const ExperimentConfig& cfg,
                       int run_index) {
  RunResult result;
  result.run = run_index;

  Environment env(scenario, cfg.reward);
  const int n_hosts = scenario.num_hosts();
  const int action_space = env.action_space_size();
  const bool feature = technique_uses_feature(cfg.technique);
  const bool mask = technique_uses_mask(cfg.technique);
  const bool aux = technique_uses_aux(cfg.technique);
  const SignalMode mode = technique_signal_mode(cfg.technique);
  const int input_dim = env.observation_size() + (feature ? action_space : 0);

  TrainerConfig tc = cfg.trainer;
  const uint64_t run_seed = run_seed_of(cfg.seed_base, run_index);
  tc.seed = run_seed;
  PpoTrainer trainer(PolicyParams::create(input_dim, action_space, tc.hidden, run_seed), tc);

  std::unique_ptr<Teacher> teacher;
  if (cfg.technique != Technique::None) {
    if (cfg.teacher_kind == "llm") {
      LlmTeacherConfig llm_cfg = cfg.llm;
      if (!llm_cfg.endpoint.cache_dir.empty()) {
        llm_cfg.endpoint.cache_dir += "/run_" + std::to_string(run_index);
      }
      teacher = std::make_unique<LlmTeacher>(scenario, env.priorities(), llm_cfg);
    } else {
      teacher = std::make_unique<ScriptedExpert>(scenario, env.priorities(),
                                                 cfg.expert_temperature);
    }
  }

  std::mt19937_64 action_rng(splitmix64(run_seed ^ 0x51ed2700dadaULL));
  std::vector<Trajectory> batch;
  std::vector<double> reward_history;

  try {
    for (long e = 0; e < cfg.episodes; ++e) {
      GuidanceState gs = schedule_state(cfg.schedule, e, tc.entropy_coef);
      bool teacher_on =
          teacher != nullptr && (feature || gs.teacher_active);

      Observation obs = env.reset(splitmix64(run_seed ^ (0xe9u + 2 * static_cast<uint64_t>(e))));
      GroundTruthSnapshot info = env.snapshot();

      Trajectory traj;
      EpisodeRecord rec;
      rec.episode = e + 1;
      double episode_reward = 0.0;
      long agree = 0;
      long teacher_steps = 0;

      for (int step = 0; step < scenario.episode_length; ++step) {
        TeacherSignal signal;
        if (teacher_on) signal = teacher->recommend(info, mode);

        std::vector<double> input =
            feature ? augment_observation(obs, signal, action_space) : obs.bits;
        ForwardResult fw = policy_forward(trainer.params(), input);

        int action;
        if (teacher_on && mask && gs.mask_strength > 0.0) {
          std::vector<double> masked = mask_policy(fw.probs, signal, gs);
          action = sample_categorical(masked, action_rng);
        } else {
          action = sample_categorical(fw.probs, action_rng);
        }
        double behavior_lp = std::log(std::max(fw.probs[action], kProbFloor));

        StepResult sr = env.step_index(action);
        double reward = sr.reward;
        if (teacher_on && cfg.technique == Technique::FeatureReward) {
          reward = shape_reward(reward, BlueAction::from_index(action, n_hosts), signal,
                                gs, n_hosts);
        }

        traj.observations.push_back(std::move(input));
        traj.actions.push_back(action);
        traj.behavior_log_probs.push_back(behavior_lp);
        traj.rewards.push_back(reward);
        traj.values.push_back(fw.value);
        traj.dones.push_back(sr.done ? 1 : 0);
        if (teacher_on && aux) traj.teacher_signals.push_back(signal);
        if (teacher_on) {
          teacher_steps += 1;
          if (action == signal.argmax()) agree += 1;
        }

        episode_reward += sr.reward;  // metrics track the raw environment reward
        rec.actions.push_back(action);
        obs = std::move(sr.observation);
        info = std::move(sr.info);
        if (sr.done) break;
      }

      rec.reward = episode_reward;
      rec.teacher_agreement =
          teacher_steps > 0 ? static_cast<double>(agree) / teacher_steps : 0.0;
      reward_history.push_back(episode_reward);

      MetricsRow row;
      row.run = run_index;
      row.episode = e + 1;
      row.reward = episode_reward;
      size_t window = std::min<size_t>(10, reward_history.size());
      double avg = 0.0;
      for (size_t i = reward_history.size() - window; i < reward_history.size(); ++i) {
        avg += reward_history[i];
      }
      row.reward_avg10 = avg / static_cast<double>(window);
      row.teacher_agreement = rec.teacher_agreement;
      row.teacher_weight = aux ? gs.teacher_weight : 0.0;
      row.mask_strength = mask ? gs.mask_strength : 0.0;
      row.entropy_coef = aux ? gs.c3_current : tc.entropy_coef;
      result.rows.push_back(row);
      result.episodes.push_back(std::move(rec));

      batch.push_back(std::move(traj));
      if (static_cast<int>(batch.size()) == tc.training_interval_episodes) {
        long batch_start = e + 1 - tc.training_interval_episodes;
        GuidanceState gs0 = schedule_state(cfg.schedule, batch_start, tc.entropy_coef);
        UpdateDiagnostics diag;
        if (aux) {
          GuidanceTerm term{gs0.teacher_weight, gs0.c3_current};
          diag = trainer.update(batch, &term);
        } else {
          diag = trainer.update(batch, nullptr);
        }
        batch.clear();
        if (diag.aborted) {
          result.aborted = true;
          result.abort_reason = diag.abort_reason;
          break;
        }
      }
    }
  } catch (const std::exception& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }

  json meta = {{"scenario", cfg.scenario},
               {"technique", technique_name(cfg.technique)},
               {"augmented", feature},
               {"obs_dim", env.observation_size()},
               {"action_space", action_space},
               {"episodes_trained", result.rows.size()},
               {"run", run_index},
               {"expert_temperature", cfg.expert_temperature}};
  result.checkpoint = trainer.checkpoint_text(meta.dump());
  return result;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "run,episode,reward,reward_avg10,teacher_agreement,teacher_weight,"
         "mask_strength,entropy_coef\n";
  for (const auto& r : rows) {
    out << r.run << ',' << r.episode << ',' << fmt(r.reward) << ',' << fmt(r.reward_avg10)
        << ',' << fmt(r.teacher_agreement) << ',' << fmt(r.teacher_weight) << ','
        << fmt(r.mask_strength) << ',' << fmt(r.entropy_coef) << '\n';
  }
  return out.str();
}

double standard_error(const std::vector<double>& values) {
  size_t n = values.size();
  if (n <= 1) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  return std::sqrt(var) / std::sqrt(static_cast<double>(n));
}

RunSummary summarize_runs(const std::vector<RunResult>& runs) {
  RunSummary summary;
  if (runs.empty()) return summary;
  size_t len = runs.front().rows.size();
  for (const auto& r : runs) len = std::min(len, r.rows.size());

  for (size_t i = 0; i < len; ++i) {
    std::vector<double> rewards;
    std::vector<double> avg10s;
    rewards.reserve(runs.size());
    for (const auto& r : runs) {
      rewards.push_back(r.rows[i].reward);
      avg10s.push_back(r.rows[i].reward_avg10);
    }
    double mean = 0.0, mean10 = 0.0;
    for (size_t k = 0; k < runs.size(); ++k) {
      mean += rewards[k];
      mean10 += avg10s[k];
    }
    mean /= static_cast<double>(runs.size());
    mean10 /= static_cast<double>(runs.size());

    summary.episodes.push_back(runs.front().rows[i].episode);
    summary.mean_reward.push_back(mean);
    summary.se_reward.push_back(standard_error(rewards));
    summary.mean_avg10.push_back(mean10);
    summary.se_avg10.push_back(standard_error(avg10s));
    summary.teacher_weight.push_back(runs.front().rows[i].teacher_weight);
    summary.mask_strength.push_back(runs.front().rows[i].mask_strength);
    summary.entropy_coef.push_back(runs.front().rows[i].entropy_coef);
  }
  return summary;
}

std::string RunSummary::to_csv() const {
  std::ostringstream out;
  out << "episode,mean_reward,se_reward,mean_avg10,se_avg10,teacher_weight,"
         "mask_strength,entropy_coef\n";
  for (size_t i = 0; i < episodes.size(); ++i) {
    out << episodes[i] << ',' << fmt(mean_reward[i]) << ',' << fmt(se_reward[i]) << ','
        << fmt(mean_avg10[i]) << ',' << fmt(se_avg10[i]) << ',' << fmt(teacher_weight[i])
        << ',' << fmt(mask_strength[i]) << ',' << fmt(entropy_coef[i]) << '\n';
  }
  return out.str();
}

RunSummary RunSummary::from_csv(const std::string& text) {
  RunSummary summary;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> parts = split(line, ',');
    if (parts.size() != 8) throw std::runtime_error("bad summary row: " + line);
    summary.episodes.push_back(std::stol(parts[0]));
    summary.mean_reward.push_back(std::stod(parts[1]));
    summary.se_reward.push_back(std::stod(parts[2]));
    summary.mean_avg10.push_back(std::stod(parts[3]));
    summary.se_avg10.push_back(std::stod(parts[4]));
    summary.teacher_weight.push_back(std::stod(parts[5]));
    summary.mask_strength.push_back(std::stod(parts[6]));
    summary.entropy_coef.push_back(std::stod(parts[7]));
  }
  return summary;
}

RunSummary RunSummary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open summary: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

CampaignResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ScenarioConfig scenario = resolve_scenario(cfg.scenario);

  CampaignResult campaign;
  campaign.runs.resize(cfg.n_runs);

  int workers = std::min<int>(cfg.workers, cfg.n_runs);
  std::atomic<int> next{0};
  auto work = [&]() {
    while (true) {
      int run_index = next.fetch_add(1);
      if (run_index >= cfg.n_runs) break;
      campaign.runs[run_index] = run_training(scenario, cfg, run_index);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (const auto& run : campaign.runs) {
    if (run.aborted) campaign.failed = true;
  }
  campaign.summary = summarize_runs(campaign.runs);

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    std::filesystem::path dir(cfg.output_dir);
    for (const auto& run : campaign.runs) {
      std::ofstream metrics(dir / ("run_" + std::to_string(run.run) + ".csv"));
      metrics << metrics_csv(run.rows);
      std::ofstream checkpoint(dir / ("run_" + std::to_string(run.run) + "_checkpoint.json"));
      checkpoint << run.checkpoint;
      if (run.aborted) {
        std::ofstream note(dir / ("run_" + std::to_string(run.run) + "_aborted.txt"));
        note << run.abort_reason << '\n';
      }
    }
    if (!campaign.summary.episodes.empty()) {
      std::ofstream summary(dir / "summary.csv");
      summary << campaign.summary.to_csv();
    }
  }
  return campaign;
}

long convergence_episode(const std::vector<double>& rewards) {
  if (rewards.empty()) return 0;
  size_t len = rewards.size();
  size_t w = std::min<size_t>(100, len);

  std::vector<double> prefix(len + 1, 0.0);
  for (size_t i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + rewards[i];
  auto trailing_mean = [&](size_t end_inclusive) {
    size_t window = std::min(w, end_inclusive + 1);
    size_t begin = end_inclusive + 1 - window;
    return (prefix[end_inclusive + 1] - prefix[begin]) / static_cast<double>(window);
  };

  double final_mean = trailing_mean(len - 1);
  double threshold = final_mean - 0.1 * std::abs(final_mean);
  for (size_t i = 0; i < len; ++i) {
    if (trailing_mean(i) >= threshold) return static_cast<long>(i) + 1;
  }
  return static_cast<long>(len);
}

ComparisonReport compare_summaries(const RunSummary& a, const RunSummary& b,
                                   long early_window) {
  if (a.episodes != b.episodes) {
    throw std::invalid_argument("summaries do not share an episode axis");
  }
  if (a.episodes.empty()) throw std::invalid_argument("empty summaries");

  ComparisonReport report;
  long window = early_window;
  if (window <= 0) {
    // Auto: the candidate's guided phase (leading episodes with teacher
    // influence), else the first quarter of the series.
    window = 0;
    for (size_t i = 0; i < a.episodes.size(); ++i) {
      if (a.teacher_weight[i] > 0.0 || a.mask_strength[i] > 0.0) {
        window = static_cast<long>(i) + 1;
      } else {
        break;
      }
    }
    if (window == 0) window = std::max<long>(1, static_cast<long>(a.episodes.size()) / 4);
  }
  window = std::min<long>(window, static_cast<long>(a.episodes.size()));
  report.early_window = window;

  double sum_a = 0.0, sum_b = 0.0;
  for (long i = 0; i < window; ++i) {
    sum_a += a.mean_reward[i];
    sum_b += b.mean_reward[i];
  }
  report.early_mean_a = sum_a / static_cast<double>(window);
  report.early_mean_b = sum_b / static_cast<double>(window);
  report.early_ratio = report.early_mean_b != 0.0
                           ? report.early_mean_a / report.early_mean_b
                           : std::numeric_limits<double>::infinity();

  report.convergence_a = convergence_episode(a.mean_reward);
  report.convergence_b = convergence_episode(b.mean_reward);
  report.speedup = report.convergence_b - report.convergence_a;
  return report;
}

std::string ComparisonReport::render() const {
  std::ostringstream out;
  out << "early_window_episodes: " << early_window << '\n';
  out << "early_mean_candidate: " << fmt(early_mean_a) << '\n';
  out << "early_mean_baseline: " << fmt(early_mean_b) << '\n';
  out << "early_reward_ratio: " << fmt(early_ratio);
  if (early_ratio >= 2.0) out << " (>2x)";
  out << '\n';
  out << "convergence_episode_candidate: " << convergence_a << '\n';
  out << "convergence_episode_baseline: " << convergence_b << '\n';
  out << "convergence_speedup_episodes: " << speedup << '\n';
  return out.str();
}

PeakednessReport diagnose_peakedness(const PolicyParams& params,
                                     const std::vector<double>& state) {
  std::vector<double> probs = softmax(params.actor.forward(state));
  std::vector<int> order(probs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return probs[x] > probs[y]; });

  PeakednessReport report;
  for (size_t i = 0; i < order.size() && i < 3; ++i) {
    report.top_actions.push_back(order[i]);
    report.top_probs.push_back(probs[order[i]]);
  }
  if (report.top_probs.size() < 2 || report.top_probs[1] <= 0.0) {
    report.infinite = true;
    report.ratio = std::numeric_limits<double>::infinity();
  } else {
    report.ratio = report.top_probs[0] / report.top_probs[1];
  }
  return report;
}

std::string PeakednessReport::render() const {
  std::ostringstream out;
  for (size_t i = 0; i < top_probs.size(); ++i) {
    out << "top" << i + 1 << "_action: " << top_actions[i]
        << "  probability: " << fmt(top_probs[i]) << '\n';
  }
  out << "max_over_second_ratio: " << (infinite ? "inf" : fmt(ratio)) << '\n';
  return out.str();
}

CanonicalState canonical_base_state(const ScenarioConfig& scenario,
                                    const RewardModel& reward) {
  Environment env(scenario, reward);
  ScriptedExpert expert(scenario, env.priorities());

  Observation obs = env.reset(0);
  GroundTruthSnapshot info = env.snapshot();
  CanonicalState state{obs.bits, info};

  for (int step = 0; step < 50; ++step) {
    BlueAction action = expert.best_action(info);
    StepResult sr = env.step(action);
    obs = sr.observation;
    info = sr.info;
    bool has_user = false;
    bool has_priv = false;
    for (const auto& h : info.hosts) {
      has_user |= h.compromise == Compromise::UserAccess;
      has_priv |= h.compromise == Compromise::Privileged;
    }
    state = CanonicalState{obs.bits, info};
    if (has_user && !has_priv) return state;
    if (sr.done) break;
  }
  return state;
}

std::vector<std::vector<double>> collect_background(const ScenarioConfig& scenario,
                                                    const RewardModel& reward,
                                                    const PolicyParams& params,
                                                    bool augmented, int count,
                                                    uint64_t seed,
                                                    double expert_temperature) {
  Environment env(scenario, reward);
  ScriptedExpert expert(scenario, env.priorities(), expert_temperature);
  int action_space = env.action_space_size();
  std::mt19937_64 rng(splitmix64(seed ^ 0xbac4c0ffeeULL));

  std::vector<std::vector<double>> background;
  background.reserve(count);
  uint64_t episode = 0;
  while (static_cast<int>(background.size()) < count) {
    Observation obs = env.reset(splitmix64(seed + 31 * episode));
    GroundTruthSnapshot info = env.snapshot();
    episode += 1;
    for (int step = 0; step < scenario.episode_length; ++step) {
      std::vector<double> input = obs.bits;
      if (augmented) {
        TeacherSignal signal = expert.recommend(info, SignalMode::SingleAction);
        input = augment_observation(obs, signal, action_space);
      }
      background.push_back(input);
      if (static_cast<int>(background.size()) >= count) break;

      ForwardResult fw = policy_forward(params, input);
      StepResult sr = env.step_index(sample_categorical(fw.probs, rng));
      obs = std::move(sr.observation);
      info = std::move(sr.info);
      if (sr.done) break;
    }
  }
  return background;
}

void write_summary_svg(const std::string& path, const RunSummary& summary,
                       const std::string& title) {
  if (summary.episodes.empty()) throw std::invalid_argument("empty summary");
  const double width = 860, height = 420;
  const double ml = 60, mr = 20, mt = 30, mb = 40;

  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < summary.episodes.size(); ++i) {
    ymin = std::min(ymin, summary.mean_avg10[i] - summary.se_avg10[i]);
    ymax = std::max(ymax, summary.mean_avg10[i] + summary.se_avg10[i]);
  }
  if (ymax <= ymin) ymax = ymin + 1.0;

  double x0 = static_cast<double>(summary.episodes.front());
  double x1 = static_cast<double>(summary.episodes.back());
  if (x1 <= x0) x1 = x0 + 1.0;
  auto px = [&](double e) { return ml + (e - x0) / (x1 - x0) * (width - ml - mr); };
  auto py = [&](double v) {
    return height - mb - (v - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  svg << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (size_t i = 0; i < summary.episodes.size(); ++i) {
    svg << px(summary.episodes[i]) << ',' << py(summary.mean_avg10[i] + summary.se_avg10[i])
        << ' ';
  }
  for (size_t i = summary.episodes.size(); i-- > 0;) {
    svg << px(summary.episodes[i]) << ',' << py(summary.mean_avg10[i] - summary.se_avg10[i])
        << ' ';
  }
  svg << "\"/>\n";

  svg << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < summary.episodes.size(); ++i) {
    svg << px(summary.episodes[i]) << ',' << py(summary.mean_avg10[i]) << ' ';
  }
  svg << "\"/>\n";

  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << ml << "\" y=\"" << height - mb + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << summary.episodes.front()
      << "</text>\n";
  svg << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << summary.episodes.back() << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(ymin)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ymin)
      << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(ymax)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ymax)
      << "</text>\n";
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write svg: " + path);
  out << svg.str();
}

}  // namespace cyberteach
