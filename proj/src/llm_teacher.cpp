#include "cyberteach/llm_teacher.hpp"

#include <algorithm>
#include <stdexcept>

namespace cyberteach {

LlmTeacher::LlmTeacher(ScenarioConfig cfg, PriorityMap priorities,
                       LlmTeacherConfig teacher_cfg, SimilarityScorer scorer)
    : cfg_(std::move(cfg)), priorities_(std::move(priorities)),
      teacher_cfg_(std::move(teacher_cfg)), scorer_(std::move(scorer)),
      client_(teacher_cfg_.endpoint), expert_(cfg_, priorities_),
      action_labels_(generic_action_labels()), host_labels_(generic_host_labels(cfg_)) {}

TeacherSignal LlmTeacher::fall_back(const GroundTruthSnapshot& info, SignalMode mode,
                                    const std::string& reason) {
  if (!teacher_cfg_.fallback_to_expert) {
    throw std::runtime_error("llm teacher failed: " + reason);
  }
  counters_.fallbacks += 1;
  return expert_.recommend(info, mode);
}

TeacherSignal LlmTeacher::recommend(const GroundTruthSnapshot& info, SignalMode mode) {
  if (mode == SignalMode::Distribution) {
    int needed = std::max(kTargetedActionKinds, cfg_.num_hosts());
    if (!teacher_cfg_.endpoint.logprobs || teacher_cfg_.endpoint.top_logprobs < needed) {
      throw std::invalid_argument(
          "distribution guidance needs logprobs with top_logprobs >= " +
          std::to_string(needed));
    }
  }
  counters_.queries += 1;
  std::string prompt = build_prompt(info, cfg_, priorities_, teacher_cfg_.format).render();
  LlmCompletion completion = client_.query(prompt);
  if (completion.status != LlmStatus::Ok) {
    return fall_back(info, mode,
                     std::string(llm_status_name(completion.status)) + ": " +
                         completion.detail);
  }

  if (mode == SignalMode::Distribution) {
    DistributionExtraction dist = extract_distribution(
        completion.tokens, action_labels_, host_labels_, teacher_cfg_.token_floor,
        teacher_cfg_.marginal_temperature);
    if (!dist.ok) return fall_back(info, mode, dist.detail);
    return dist.signal;
  }

  ActionExtraction extraction =
      extract_action(completion.completion, action_labels_, host_labels_, scorer_);
  if (extraction.status != ExtractStatus::Ok) {
    return fall_back(info, mode,
                     std::string(extract_status_name(extraction.status)) + ": " +
                         extraction.detail);
  }
  return TeacherSignal::single(extraction.action.to_index(cfg_.num_hosts()));
}

}  // namespace cyberteach
