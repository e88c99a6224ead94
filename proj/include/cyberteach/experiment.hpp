#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cyberteach/env.hpp"
#include "cyberteach/explain.hpp"
#include "cyberteach/guidance.hpp"
#include "cyberteach/llm_teacher.hpp"
#include "cyberteach/ppo.hpp"
#include "cyberteach/teacher.hpp"
#include "cyberteach/topology.hpp"

namespace cyberteach {

struct ExperimentConfig {
  std::string scenario = "builtin:default";  // builtin:default, builtin:reduced, or a path
  Technique technique = Technique::None;
  GuidanceSchedule schedule;
  TrainerConfig trainer;
  RewardModel reward;
  std::string teacher_kind = "scripted";  // scripted | llm
  LlmTeacherConfig llm;
  double expert_temperature = 0.06;
  int n_runs = 1;
  long episodes = 100;
  uint64_t seed_base = 1;
  int workers = 1;
  std::string output_dir;

  void validate() const;
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

ScenarioConfig resolve_scenario(const std::string& name);

struct MetricsRow {
  int run = 0;
  long episode = 0;  // 1-based
  double reward = 0.0;
  double reward_avg10 = 0.0;  // trailing min(episode, 10) episodes
  double teacher_agreement = 0.0;
  double teacher_weight = 0.0;
  double mask_strength = 0.0;
  double entropy_coef = 0.0;
};

struct EpisodeRecord {
  long episode = 0;
  double reward = 0.0;
  double teacher_agreement = 0.0;
  std::vector<int> actions;
};

struct RunResult {
  int run = 0;
  std::vector<MetricsRow> rows;
  std::vector<EpisodeRecord> episodes;
  std::string checkpoint;  // trainer checkpoint (JSON text)
  bool aborted = false;
  std::string abort_reason;
};

/// Per-episode cross-run mean and standard error (SE = SD / sqrt(n_runs)).
struct RunSummary {
  std::vector<long> episodes;
  std::vector<double> mean_reward;
  std::vector<double> se_reward;
  std::vector<double> mean_avg10;
  std::vector<double> se_avg10;
  std::vector<double> teacher_weight;
  std::vector<double> mask_strength;
  std::vector<double> entropy_coef;

  std::string to_csv() const;
  static RunSummary from_csv(const std::string& text);
  static RunSummary load(const std::string& path);
};

/// A single seeded training run; aborts (with reason) instead of throwing on
/// non-finite losses or hard teacher failures.
RunResult run_training(const ScenarioConfig& scenario, const ExperimentConfig& cfg,
                       int run_index);

struct CampaignResult {
  bool failed = false;
  std::vector<RunResult> runs;
  RunSummary summary;
};

/// Runs n_runs seeded runs (in parallel up to `workers`), writes per-run
/// metrics, checkpoints and the cross-run summary into output_dir.
CampaignResult run_experiment(const ExperimentConfig& cfg);

RunSummary summarize_runs(const std::vector<RunResult>& runs);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

double standard_error(const std::vector<double>& values);

struct ComparisonReport {
  long early_window = 0;  // episodes included in the early-phase means
  double early_mean_a = 0.0;
  double early_mean_b = 0.0;
  double early_ratio = 0.0;
  long convergence_a = 0;
  long convergence_b = 0;
  long speedup = 0;  // convergence_b - convergence_a

  std::string render() const;
};

/// A is the candidate (typically guided), B the baseline. early_window 0
/// auto-detects A's guided phase from its schedule columns.
ComparisonReport compare_summaries(const RunSummary& a, const RunSummary& b,
                                   long early_window = 0);

/// First episode whose trailing-w mean reaches 90% of the final trailing-w
/// mean (w = min(100, series length)).
long convergence_episode(const std::vector<double>& rewards);

struct PeakednessReport {
  std::vector<double> top_probs;   // three largest
  std::vector<int> top_actions;
  double ratio = 0.0;              // largest / second largest
  bool infinite = false;           // second-largest probability is zero

  std::string render() const;
};

PeakednessReport diagnose_peakedness(const PolicyParams& params,
                                     const std::vector<double>& state);

struct CanonicalState {
  std::vector<double> observation;  // raw observation bits
  GroundTruthSnapshot info;
};

/// Deterministic per-scenario base state: roll the scripted expert from seed 0
/// and take the first state with user-level but not privileged compromise.
CanonicalState canonical_base_state(const ScenarioConfig& scenario,
                                    const RewardModel& reward = {});

/// Observation sample for initializing the local explainer, collected by
/// rolling the given policy in the environment.
std::vector<std::vector<double>> collect_background(const ScenarioConfig& scenario,
                                                    const RewardModel& reward,
                                                    const PolicyParams& params,
                                                    bool augmented, int count,
                                                    uint64_t seed,
                                                    double expert_temperature = 0.06);

/// Mean line with a +-1 SE band as a standalone SVG file.
void write_summary_svg(const std::string& path, const RunSummary& summary,
                       const std::string& title);

}  // namespace cyberteach
