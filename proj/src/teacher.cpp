#include "cyberteach/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cyberteach/nn.hpp"

namespace cyberteach {

TeacherSignal TeacherSignal::single(int index) {
  TeacherSignal s;
  s.mode = SignalMode::SingleAction;
  s.action_index = index;
  return s;
}

TeacherSignal TeacherSignal::from_distribution(std::vector<double> probs) {
  TeacherSignal s;
  s.mode = SignalMode::Distribution;
  s.distribution = std::move(probs);
  s.action_index = s.argmax();
  return s;
}

int TeacherSignal::argmax() const {
  if (mode == SignalMode::SingleAction) return action_index;
  int best = 0;
  for (size_t i = 1; i < distribution.size(); ++i) {
    if (distribution[i] > distribution[best]) best = static_cast<int>(i);
  }
  return best;
}

bool TeacherSignal::valid(int action_space) const {
  if (mode == SignalMode::SingleAction) {
    return action_index >= 0 && action_index < action_space;
  }
  if (static_cast<int>(distribution.size()) != action_space) return false;
  double sum = 0.0;
  for (double p : distribution) {
    if (p < 0.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

namespace {

// Concern levels drive both host selection and the score matrix:
// 3 privileged, 2 user access, 1 suspicious artifacts only, 0 nothing.
int concern_of(const HostSnapshot& h) {
  if (h.compromise == Compromise::Privileged) return 3;
  if (h.compromise == Compromise::UserAccess) return 2;
  if (!h.suspicious_files.empty() || !h.suspicious_processes.empty()) return 1;
  return 0;
}

double concern_scale(int c) {
  // Residual artifacts (concern 1) linger on every host red ever touched, so
  // they get a small scale or the distribution smears across analyse actions.
  static constexpr double kScale[4] = {0.02, 0.05, 0.4, 1.0};
  return kScale[c];
}

double kind_match(ActionKind kind, int concern) {
  switch (kind) {
    case ActionKind::Restore:
      return concern == 3 ? 1.0 : (concern == 2 ? 0.6 : 0.2);
    case ActionKind::Remove:
      return concern == 2 ? 1.0 : (concern == 1 ? 0.5 : (concern == 3 ? 0.15 : 0.2));
    case ActionKind::Analyse:
      return concern == 1 ? 1.0 : (concern == 2 ? 0.55 : 0.3);
    case ActionKind::Patch:
      return 0.25;
    case ActionKind::Isolate:
      return concern == 3 ? 0.3 : 0.1;
    case ActionKind::Unisolate:
      return 0.1;
    case ActionKind::Monitor:
      return 0.0;
  }
  return 0.0;
}

constexpr double kMonitorScore = 0.02;
constexpr double kLexEps = 1e-6;

}  // namespace

ScriptedExpert::ScriptedExpert(ScenarioConfig cfg, PriorityMap priorities,
                               double softmax_temperature)
    : cfg_(std::move(cfg)), priorities_(std::move(priorities)),
      temperature_(softmax_temperature) {}

BlueAction ScriptedExpert::best_action(const GroundTruthSnapshot& info) const {
  int best = -1;
  int best_concern = 0;
  int best_hops = 0;
  for (int h = 0; h < cfg_.num_hosts(); ++h) {
    int c = concern_of(info.hosts[h]);
    if (c == 0) continue;
    int hops = priorities_.hops_of(cfg_.host(h).id);
    bool better = false;
    if (best < 0) {
      better = true;
    } else if (c != best_concern) {
      better = c > best_concern;
    } else if (hops != best_hops) {
      better = hops < best_hops;
    } else {
      better = cfg_.host(h).generic_label < cfg_.host(best).generic_label;
    }
    if (better) {
      best = h;
      best_concern = c;
      best_hops = hops;
    }
  }
  if (best < 0) return {ActionKind::Monitor, -1};
  ActionKind kind = best_concern == 3   ? ActionKind::Restore
                    : best_concern == 2 ? ActionKind::Remove
                                        : ActionKind::Analyse;
  return {kind, best};
}

std::vector<double> ScriptedExpert::action_scores(const GroundTruthSnapshot& info) const {
  int n = cfg_.num_hosts();
  std::vector<double> scores(BlueAction::action_space_size(n), 0.0);

  // Lexicographic rank of each host's generic label breaks exact ties the
  // same way best_action() does.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return cfg_.host(a).generic_label < cfg_.host(b).generic_label;
  });
  std::vector<int> lex_rank(n, 0);
  for (int r = 0; r < n; ++r) lex_rank[order[r]] = r;

  for (int h = 0; h < n; ++h) {
    int c = concern_of(info.hosts[h]);
    int hops = priorities_.hops_of(cfg_.host(h).id);
    double urgency = 0.5 + RewardModel::hop_weight(hops);
    for (int k = 0; k < kTargetedActionKinds; ++k) {
      ActionKind kind = static_cast<ActionKind>(k);
      double s = concern_scale(c) * kind_match(kind, c) * urgency;
      s += kLexEps * (n - lex_rank[h]);
      scores[BlueAction{kind, h}.to_index(n)] = s;
    }
  }
  scores[BlueAction{ActionKind::Monitor, -1}.to_index(n)] = kMonitorScore;
  return scores;
}

TeacherSignal ScriptedExpert::recommend(const GroundTruthSnapshot& info, SignalMode mode) {
  if (mode == SignalMode::SingleAction) {
    return TeacherSignal::single(best_action(info).to_index(cfg_.num_hosts()));
  }
  std::vector<double> scores = action_scores(info);
  for (double& s : scores) s /= temperature_;
  return TeacherSignal::from_distribution(softmax(scores));
}

}  // namespace cyberteach
