#pragma once

#include <memory>
#include <string>

#include "cyberteach/extract.hpp"
#include "cyberteach/llm_client.hpp"
#include "cyberteach/prompt.hpp"
#include "cyberteach/teacher.hpp"

namespace cyberteach {

struct LlmTeacherConfig {
  LlmEndpointConfig endpoint;
  PromptFormat format = PromptFormat::Sentence;
  bool fallback_to_expert = true;  // otherwise throw on endpoint or extraction failure
  double token_floor = 1e-6;
  double marginal_temperature = 1.0;  // sharpening disabled by default
};

/// Teacher backed by a remote chat-completion endpoint: renders the prompt,
/// queries, and maps the response back to the action space. Endpoint or
/// extraction failures fall back to the scripted expert for that step unless
/// configured to hard-fail.
class LlmTeacher final : public Teacher {
 public:
  LlmTeacher(ScenarioConfig cfg, PriorityMap priorities, LlmTeacherConfig teacher_cfg,
             SimilarityScorer scorer = {});

  TeacherSignal recommend(const GroundTruthSnapshot& info, SignalMode mode) override;
  std::string name() const override { return "llm"; }

  struct Counters {
    long queries = 0;
    long fallbacks = 0;
  };
  const Counters& counters() const { return counters_; }
  const LlmClient& client() const { return client_; }

 private:
  TeacherSignal fall_back(const GroundTruthSnapshot& info, SignalMode mode,
                          const std::string& reason);

  ScenarioConfig cfg_;
  PriorityMap priorities_;
  LlmTeacherConfig teacher_cfg_;
  SimilarityScorer scorer_;
  LlmClient client_;
  ScriptedExpert expert_;
  std::vector<std::string> action_labels_;
  std::vector<std::string> host_labels_;
  Counters counters_;
};

}  // namespace cyberteach
