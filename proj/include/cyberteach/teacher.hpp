#pragma once

#include <string>
#include <vector>

#include "cyberteach/env.hpp"
#include "cyberteach/topology.hpp"

namespace cyberteach {

enum class SignalMode { SingleAction, Distribution };

/// A teacher's per-state recommendation: one flat action index, or a full
/// probability distribution over the flat action space.
struct TeacherSignal {
  SignalMode mode = SignalMode::SingleAction;
  int action_index = -1;
  std::vector<double> distribution;

  static TeacherSignal single(int index);
  static TeacherSignal from_distribution(std::vector<double> probs);

  /// The recommended action either way (distribution argmax).
  int argmax() const;
  bool valid(int action_space) const;
};

class Teacher {
 public:
  virtual ~Teacher() = default;
  virtual TeacherSignal recommend(const GroundTruthSnapshot& info, SignalMode mode) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic heuristic defender: act on the lowest-hop host with the
/// worst compromise (Restore if Privileged, Remove if UserAccess, Analyse if
/// only suspicious artifacts), otherwise Monitor. Distribution mode softmaxes
/// the underlying per-action scores.
class ScriptedExpert final : public Teacher {
 public:
  ScriptedExpert(ScenarioConfig cfg, PriorityMap priorities,
                 double softmax_temperature = 0.06);

  TeacherSignal recommend(const GroundTruthSnapshot& info, SignalMode mode) override;
  std::string name() const override { return "scripted-expert"; }

  BlueAction best_action(const GroundTruthSnapshot& info) const;
  std::vector<double> action_scores(const GroundTruthSnapshot& info) const;

 private:
  ScenarioConfig cfg_;
  PriorityMap priorities_;
  double temperature_;
};

}  // namespace cyberteach
