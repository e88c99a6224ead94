#include "cyberteach/extract.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace cyberteach {

const char* extract_status_name(ExtractStatus s) {
  switch (s) {
    case ExtractStatus::Ok: return "ok";
    case ExtractStatus::EmptyCompletion: return "empty-completion";
    case ExtractStatus::NoMatch: return "no-match";
    case ExtractStatus::ScorerFailure: return "scorer-failure";
  }
  return "?";
}

namespace {

std::string lowercase(const std::string& text) {
  std::string out = text;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

/// Earliest whole-token occurrence of any label; ties broken by label order.
int earliest_label(const std::string& text, const std::vector<std::string>& labels) {
  size_t best_pos = std::string::npos;
  int best_label = -1;
  for (size_t li = 0; li < labels.size(); ++li) {
    const std::string needle = lowercase(labels[li]);
    size_t from = 0;
    while (true) {
      size_t pos = text.find(needle, from);
      if (pos == std::string::npos) break;
      bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
      size_t end = pos + needle.size();
      bool right_ok = end >= text.size() || !is_word_char(text[end]);
      if (left_ok && right_ok) {
        if (pos < best_pos) {
          best_pos = pos;
          best_label = static_cast<int>(li);
        }
        break;
      }
      from = pos + 1;
    }
  }
  return best_label;
}

/// Highest-precision label against the response; -1 when every score is zero.
int best_scored_label(const std::string& completion,
                      const std::vector<std::string>& labels,
                      const SimilarityScorer& scorer) {
  int best = -1;
  double best_score = 0.0;
  for (size_t li = 0; li < labels.size(); ++li) {
    double p = scorer.score(labels[li], completion).precision;
    if (p > best_score) {
      best_score = p;
      best = static_cast<int>(li);
    }
  }
  return best;
}

std::string trimmed_lower(const std::string& token) {
  size_t begin = 0;
  size_t end = token.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(token[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(token[end - 1]))) --end;
  return lowercase(token.substr(begin, end - begin));
}

int label_of_token(const std::string& token, const std::vector<std::string>& labels) {
  std::string norm = trimmed_lower(token);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (norm == lowercase(labels[i])) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

ActionExtraction extract_action(const std::string& completion,
                                const std::vector<std::string>& action_labels,
                                const std::vector<std::string>& host_labels,
                                const SimilarityScorer& scorer) {
  ActionExtraction out;
  std::string text = lowercase(completion);
  if (tokenize(text).empty()) {
    out.status = ExtractStatus::EmptyCompletion;
    out.detail = "completion has no tokens";
    return out;
  }

  int action = earliest_label(text, action_labels);
  int host = earliest_label(text, host_labels);

  try {
    if (action < 0) {
      action = best_scored_label(completion, action_labels, scorer);
      out.used_fallback = true;
    }
    if (host < 0) {
      host = best_scored_label(completion, host_labels, scorer);
      out.used_fallback = true;
    }
  } catch (const std::exception& e) {
    out.status = ExtractStatus::ScorerFailure;
    out.detail = e.what();
    return out;
  }

  if (action < 0 || host < 0) {
    out.status = ExtractStatus::NoMatch;
    out.detail = action < 0 ? "no action label matched" : "no host label matched";
    return out;
  }

  out.action = BlueAction{static_cast<ActionKind>(action), host};
  out.action_label = action_labels[action];
  out.host_label = host_labels[host];
  return out;
}

DistributionExtraction extract_distribution(const std::vector<TokenTopLogprobs>& tokens,
                                            const std::vector<std::string>& action_tokens,
                                            const std::vector<std::string>& host_tokens,
                                            double token_floor,
                                            double marginal_temperature) {
  DistributionExtraction out;
  if (marginal_temperature <= 0.0) {
    out.detail = "marginal temperature must be positive";
    return out;
  }

  const TokenTopLogprobs* action_position = nullptr;
  const TokenTopLogprobs* host_position = nullptr;
  for (const auto& tok : tokens) {
    if (action_position == nullptr && label_of_token(tok.token, action_tokens) >= 0) {
      action_position = &tok;
    } else if (host_position == nullptr && label_of_token(tok.token, host_tokens) >= 0) {
      host_position = &tok;
    }
  }
  if (action_position == nullptr || host_position == nullptr) {
    out.detail = action_position == nullptr ? "no generated action token"
                                            : "no generated host token";
    return out;
  }

  auto marginal = [&](const TokenTopLogprobs& position,
                      const std::vector<std::string>& labels,
                      std::vector<double>& probs) -> bool {
    probs.assign(labels.size(), -1.0);
    bool any = false;
    for (const auto& [token, logprob] : position.top) {
      int li = label_of_token(token, labels);
      if (li >= 0 && probs[li] < 0.0) {
        probs[li] = std::exp(logprob);
        any = true;
      }
    }
    if (!any) return false;  // every valid token missing from top-k
    double sum = 0.0;
    for (double& p : probs) {
      if (p < 0.0) p = token_floor;
      if (marginal_temperature != 1.0 && p > 0.0) {
        p = std::pow(p, 1.0 / marginal_temperature);
      }
      sum += p;
    }
    for (double& p : probs) p /= sum;
    return true;
  };

  std::vector<double> action_probs;
  std::vector<double> host_probs;
  if (!marginal(*action_position, action_tokens, action_probs)) {
    out.detail = "no valid action token in top-k table";
    return out;
  }
  if (!marginal(*host_position, host_tokens, host_probs)) {
    out.detail = "no valid host token in top-k table";
    return out;
  }

  int n_hosts = static_cast<int>(host_tokens.size());
  std::vector<double> joint(BlueAction::action_space_size(n_hosts), 0.0);
  double sum = 0.0;
  for (size_t k = 0; k < action_probs.size(); ++k) {
    for (int h = 0; h < n_hosts; ++h) {
      double p = action_probs[k] * host_probs[h];
      joint[BlueAction{static_cast<ActionKind>(k), h}.to_index(n_hosts)] = p;
      sum += p;
    }
  }
  for (double& p : joint) p /= sum;

  out.ok = true;
  out.signal = TeacherSignal::from_distribution(std::move(joint));
  return out;
}

}  // namespace cyberteach
