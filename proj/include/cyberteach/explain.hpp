#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cyberteach {

struct FeatureAttribution {
  int feature = 0;
  double weight = 0.0;
  int rank = 0;        // 1 = largest |weight|
  bool towards = false;  // weight > 0 pushes the policy toward the explained action
};

struct AttributionReport {
  std::vector<FeatureAttribution> features;  // index-aligned with the state vector
  double intercept = 0.0;
  bool used_ridge_fallback = false;

  int teacher_feature_index = -1;  // index of the teacher one-hot feature, if any
  int teacher_action_rank = 0;     // rank of the teacher action within the policy
  bool reco_in_top4 = false;

  const FeatureAttribution& by_rank(int rank) const;
};

struct LimeConfig {
  int n_perturb = 2000;
  double kernel_width_factor = 0.75;  // width = factor * sqrt(D)
  double ridge_lambda = 1e-6;
  double resample_prob = 0.5;  // chance a feature is redrawn from the background marginal
};

/// Local linear surrogate around `base_state`: perturb binary features with
/// flip probabilities derived from background frequencies, label each
/// perturbation with `target_fn` (the policy's probability of the base
/// state's argmax action), and fit exponential-kernel weighted least squares.
AttributionReport fit_local_explainer(
    const std::function<double(const std::vector<double>&)>& target_fn,
    const std::vector<double>& base_state,
    const std::vector<std::vector<double>>& background, const LimeConfig& cfg,
    uint64_t seed);

/// Fills the teacher-recommendation columns from the policy distribution at
/// the base state.
void annotate_teacher_columns(AttributionReport& report,
                              const std::vector<double>& base_policy, int teacher_action,
                              int teacher_feature_index);

/// CSV rows matching the report table layout:
/// episode,feature,weight,ranking,direction,reco_in_top4
std::string report_csv(const AttributionReport& report, long episode_label);

}  // namespace cyberteach
