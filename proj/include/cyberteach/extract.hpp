#pragma once

#include <string>
#include <vector>

#include "cyberteach/env.hpp"
#include "cyberteach/llm_client.hpp"
#include "cyberteach/similarity.hpp"
#include "cyberteach/teacher.hpp"

namespace cyberteach {

enum class ExtractStatus { Ok, EmptyCompletion, NoMatch, ScorerFailure };

const char* extract_status_name(ExtractStatus s);

struct ActionExtraction {
  ExtractStatus status = ExtractStatus::Ok;
  BlueAction action;
  std::string action_label;
  std::string host_label;
  bool used_fallback = false;  // similarity fallback engaged for some part
  std::string detail;
};

/// Maps a completion to an executable action: a first pass takes the earliest
/// valid action label and earliest valid host label (case-insensitive, whole
/// tokens); anything the first pass misses falls back to picking the label
/// with the highest precision score against the whole response.
///
/// `action_labels` is index-aligned with ActionKind, `host_labels` with the
/// scenario host order.
ActionExtraction extract_action(const std::string& completion,
                                const std::vector<std::string>& action_labels,
                                const std::vector<std::string>& host_labels,
                                const SimilarityScorer& scorer);

struct DistributionExtraction {
  bool ok = false;
  TeacherSignal signal;
  std::string detail;
};

/// Builds a Distribution teacher signal from per-token top-k tables: locate
/// the generated action and host tokens, renormalize each marginal over valid
/// labels (absent labels get `token_floor`), take the Cartesian product, and
/// flatten into the kind-major action index layout (Monitor gets zero mass).
///
/// `marginal_temperature` sharpens (< 1) or flattens (> 1) each marginal as
/// p^(1/T); 1.0 leaves them untouched and is the default in every shipped
/// configuration.
DistributionExtraction extract_distribution(const std::vector<TokenTopLogprobs>& tokens,
                                            const std::vector<std::string>& action_tokens,
                                            const std::vector<std::string>& host_tokens,
                                            double token_floor = 1e-6,
                                            double marginal_temperature = 1.0);

}  // namespace cyberteach
