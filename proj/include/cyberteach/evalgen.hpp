#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyberteach/env.hpp"
#include "cyberteach/similarity.hpp"
#include "cyberteach/teacher.hpp"
#include "cyberteach/topology.hpp"

namespace cyberteach {

enum class Difficulty { Easy, Medium, Hard };

const char* difficulty_name(Difficulty d);
Difficulty difficulty_from_name(const std::string& name);

/// Involved-host band per difficulty (inclusive).
std::pair<int, int> difficulty_band(Difficulty d);

struct EvalQuestion {
  std::string id;
  Difficulty difficulty = Difficulty::Easy;
  std::vector<int> involved_hosts;
  GroundTruthSnapshot scenario_state;
  std::string rendered_json;
  std::string rendered_sentence;
  BlueAction label;
  std::string label_text;  // generic "actionK hostN" form
};

struct QuestionCounts {
  int easy = 20;
  int medium = 40;
  int hard = 40;
};

/// Deterministic constrained generator. Involved hosts carry a non-clean
/// state (at least one at UserAccess or worse so the expert label lands on an
/// involved host); the op server is never involved, so it is never compromised
/// at timestep 0. Throws when the requested counts exceed the scenario's
/// distinct-question capacity.
std::vector<EvalQuestion> generate_questions(const ScenarioConfig& cfg,
                                             const PriorityMap& priorities,
                                             const QuestionCounts& counts, uint64_t seed);

struct ResponseRecord {
  std::string question_id;
  std::string format;  // "json" or "sentence"
  std::string text;
};

struct EvalResult {
  std::string question_id;
  std::string format;
  std::string llm_response;
  std::optional<Scores> scores;          // null when the response is missing
  std::optional<double> manual_score;    // 0, 0.5 or 1 once reviewed
  bool flagged_missing = false;
};

/// Scores each provided response against its question's label text. For every
/// format present in the response set, questions without a response get a
/// flagged result with null metrics.
std::vector<EvalResult> score_responses(const std::vector<EvalQuestion>& questions,
                                        const std::vector<ResponseRecord>& responses,
                                        const SimilarityScorer& scorer);

struct GroupStats {
  int count = 0;    // results contributing to the average
  int missing = 0;  // flagged / unscored results excluded from it
  double total = 0.0;
  double average = 0.0;
};

/// difficulty x format totals and averages of auto precision scores.
std::map<std::pair<std::string, std::string>, GroupStats> summarize_precision(
    const std::vector<EvalQuestion>& questions, const std::vector<EvalResult>& results);

/// difficulty x format totals and averages of manual rubric scores.
std::map<std::pair<std::string, std::string>, GroupStats> summarize_manual(
    const std::vector<EvalQuestion>& questions, const std::vector<EvalResult>& results);

std::string render_summary(
    const std::map<std::pair<std::string, std::string>, GroupStats>& groups);

/// One JSON object per line with an empty manual_score slot for review.
void write_review_queue(const std::string& path, const std::vector<EvalQuestion>& questions,
                        const std::vector<EvalResult>& results);

/// Reads a filled review file back; rejects any manual score outside
/// {0, 0.5, 1} naming the offending line.
std::vector<EvalResult> ingest_review_queue(const std::string& path);

void save_questions(const std::string& path, const std::vector<EvalQuestion>& questions);
std::vector<EvalQuestion> load_questions(const std::string& path, const ScenarioConfig& cfg);

void save_results(const std::string& path, const std::vector<EvalResult>& results);

}  // namespace cyberteach
