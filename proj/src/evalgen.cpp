#include "cyberteach/evalgen.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cyberteach/prompt.hpp"
#include "json.hpp"

namespace cyberteach {

using nlohmann::json;

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "?";
}

Difficulty difficulty_from_name(const std::string& name) {
  if (name == "easy") return Difficulty::Easy;
  if (name == "medium") return Difficulty::Medium;
  if (name == "hard") return Difficulty::Hard;
  throw std::invalid_argument("unknown difficulty: " + name);
}

std::pair<int, int> difficulty_band(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return {1, 2};
    case Difficulty::Medium: return {3, 7};
    case Difficulty::Hard: return {8, 13};
  }
  return {0, 0};
}

namespace {

constexpr const char* kQuestionRedIp = "10.0.250.9";

std::string signature_of(const std::vector<int>& involved,
                         const std::vector<Compromise>& severity) {
  std::ostringstream sig;
  for (size_t i = 0; i < involved.size(); ++i) {
    sig << involved[i] << ':' << static_cast<int>(severity[i]) << ';';
  }
  return sig.str();
}

void apply_severity(HostSnapshot& host, Compromise severity, const std::string& red_ip,
                    int host_index) {
  host.compromise = severity;
  bool nix = host_index % 2 == 1;
  if (severity == Compromise::UserAccess || severity == Compromise::Privileged) {
    host.suspicious_files.push_back(
        {nix ? "cmd.sh" : "cmd.exe", nix ? "/tmp/" : "C:\\temp\\", 0.9, false});
    host.suspicious_processes.push_back({nix ? "shell.sh" : "shell.exe",
                                         nix ? "/tmp/" : "C:\\temp\\", 0.9, false, red_ip,
                                         50000 + host_index});
  }
  if (severity == Compromise::Privileged) {
    host.suspicious_files.push_back(
        {nix ? "escalate.sh" : "escalate.exe", nix ? "/tmp/" : "C:\\temp\\", 0.9, false});
  }
}

}  // namespace

std::vector<EvalQuestion> generate_questions(const ScenarioConfig& cfg,
                                             const PriorityMap& priorities,
                                             const QuestionCounts& counts, uint64_t seed) {
  if (counts.easy < 0 || counts.medium < 0 || counts.hard < 0) {
    throw std::invalid_argument("question counts must be >= 0");
  }

  std::vector<int> candidates;  // every host but the op server
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    if (h != cfg.op_server_index()) candidates.push_back(h);
  }

  std::mt19937_64 rng(seed);
  ScriptedExpert expert(cfg, priorities);
  std::set<std::string> seen;
  std::vector<EvalQuestion> questions;

  auto generate_for = [&](Difficulty difficulty, int count) {
    auto [lo, hi] = difficulty_band(difficulty);
    int max_involved = std::min(hi, static_cast<int>(candidates.size()));
    if (count > 0 && max_involved < lo) {
      throw std::runtime_error(std::string("scenario too small for ") +
                               difficulty_name(difficulty) + " questions");
    }
    for (int n = 0; n < count; ++n) {
      constexpr int kMaxAttempts = 500;
      bool produced = false;
      for (int attempt = 0; attempt < kMaxAttempts && !produced; ++attempt) {
        std::uniform_int_distribution<int> size_dist(lo, max_involved);
        int k = size_dist(rng);
        std::vector<int> pool = candidates;
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<int> involved(pool.begin(), pool.begin() + k);
        std::sort(involved.begin(), involved.end());

        std::vector<Compromise> severity(involved.size());
        std::uniform_int_distribution<int> sev_dist(1, 3);
        for (auto& s : severity) s = static_cast<Compromise>(sev_dist(rng));
        // The expert label must land on an involved host, so at least one
        // involved host needs user-level access or worse.
        bool actionable = std::any_of(severity.begin(), severity.end(), [](Compromise c) {
          return c == Compromise::UserAccess || c == Compromise::Privileged;
        });
        if (!actionable) {
          std::uniform_int_distribution<int> strong(2, 3);
          severity[0] = static_cast<Compromise>(strong(rng));
        }

        std::string sig = signature_of(involved, severity);
        if (!seen.insert(sig).second) continue;

        EvalQuestion q;
        q.difficulty = difficulty;
        q.involved_hosts = involved;
        q.id = std::string(difficulty_name(difficulty)) + "-" + std::to_string(n + 1);

        EnvState state;
        state.hosts.assign(cfg.num_hosts(), HostState{});
        state.red_ip = kQuestionRedIp;
        q.scenario_state = snapshot_of(cfg, state);
        for (size_t i = 0; i < involved.size(); ++i) {
          apply_severity(q.scenario_state.hosts[involved[i]], severity[i], kQuestionRedIp,
                         involved[i]);
        }

        q.rendered_json =
            build_prompt(q.scenario_state, cfg, priorities, PromptFormat::Json).render();
        q.rendered_sentence =
            build_prompt(q.scenario_state, cfg, priorities, PromptFormat::Sentence).render();
        q.label = expert.best_action(q.scenario_state);
        q.label_text = generic_action_labels()[static_cast<int>(q.label.kind)] + " " +
                       cfg.host(q.label.target).generic_label;
        questions.push_back(std::move(q));
        produced = true;
      }
      if (!produced) {
        throw std::runtime_error(std::string("requested counts exceed distinct ") +
                                 difficulty_name(difficulty) + "-question capacity");
      }
    }
  };

  generate_for(Difficulty::Easy, counts.easy);
  generate_for(Difficulty::Medium, counts.medium);
  generate_for(Difficulty::Hard, counts.hard);
  return questions;
}

std::vector<EvalResult> score_responses(const std::vector<EvalQuestion>& questions,
                                        const std::vector<ResponseRecord>& responses,
                                        const SimilarityScorer& scorer) {
  std::map<std::pair<std::string, std::string>, const ResponseRecord*> by_key;
  std::set<std::string> formats;
  for (const auto& r : responses) {
    by_key[{r.question_id, r.format}] = &r;
    formats.insert(r.format);
  }

  std::vector<EvalResult> results;
  for (const auto& q : questions) {
    for (const auto& format : formats) {
      EvalResult res;
      res.question_id = q.id;
      res.format = format;
      auto it = by_key.find({q.id, format});
      if (it == by_key.end() || tokenize(it->second->text).empty()) {
        res.flagged_missing = true;
        if (it != by_key.end()) res.llm_response = it->second->text;
      } else {
        res.llm_response = it->second->text;
        res.scores = scorer.score(res.llm_response, q.label_text);
      }
      results.push_back(std::move(res));
    }
  }
  return results;
}

namespace {

std::map<std::pair<std::string, std::string>, GroupStats> summarize(
    const std::vector<EvalQuestion>& questions, const std::vector<EvalResult>& results,
    const std::function<std::optional<double>(const EvalResult&)>& value_of) {
  std::map<std::string, std::string> difficulty_of;
  for (const auto& q : questions) difficulty_of[q.id] = difficulty_name(q.difficulty);

  std::map<std::pair<std::string, std::string>, GroupStats> groups;
  for (const auto& r : results) {
    auto it = difficulty_of.find(r.question_id);
    if (it == difficulty_of.end()) continue;
    GroupStats& g = groups[{it->second, r.format}];
    std::optional<double> v = value_of(r);
    if (v.has_value()) {
      g.count += 1;
      g.total += *v;
    } else {
      g.missing += 1;
    }
  }
  for (auto& [key, g] : groups) {
    g.average = g.count > 0 ? g.total / g.count : 0.0;
  }
  return groups;
}

}  // namespace

std::map<std::pair<std::string, std::string>, GroupStats> summarize_precision(
    const std::vector<EvalQuestion>& questions, const std::vector<EvalResult>& results) {
  return summarize(questions, results, [](const EvalResult& r) -> std::optional<double> {
    if (!r.scores.has_value()) return std::nullopt;
    return r.scores->precision;
  });
}

std::map<std::pair<std::string, std::string>, GroupStats> summarize_manual(
    const std::vector<EvalQuestion>& questions, const std::vector<EvalResult>& results) {
  return summarize(questions, results,
                   [](const EvalResult& r) { return r.manual_score; });
}

std::string render_summary(
    const std::map<std::pair<std::string, std::string>, GroupStats>& groups) {
  std::ostringstream out;
  out << "difficulty,format,count,missing,total,average\n";
  for (const auto& [key, g] : groups) {
    out << key.first << ',' << key.second << ',' << g.count << ',' << g.missing << ','
        << g.total << ',' << g.average << '\n';
  }
  return out.str();
}

namespace {

json result_to_json(const EvalResult& r) {
  json doc = {{"id", r.question_id},
              {"format", r.format},
              {"response", r.llm_response},
              {"missing", r.flagged_missing}};
  if (r.scores.has_value()) {
    doc["precision"] = r.scores->precision;
    doc["recall"] = r.scores->recall;
    doc["f1"] = r.scores->f1;
  }
  doc["manual_score"] = r.manual_score.has_value() ? json(*r.manual_score) : json(nullptr);
  return doc;
}

EvalResult result_from_json(const json& doc, int line_number) {
  EvalResult r;
  r.question_id = doc.at("id").get<std::string>();
  r.format = doc.at("format").get<std::string>();
  r.llm_response = doc.value("response", "");
  r.flagged_missing = doc.value("missing", false);
  if (doc.contains("precision")) {
    Scores s;
    s.precision = doc.at("precision").get<double>();
    s.recall = doc.value("recall", 0.0);
    s.f1 = doc.value("f1", 0.0);
    r.scores = s;
  }
  if (doc.contains("manual_score") && !doc.at("manual_score").is_null()) {
    double v = doc.at("manual_score").get<double>();
    if (v != 0.0 && v != 0.5 && v != 1.0) {
      throw std::runtime_error("line " + std::to_string(line_number) +
                               ": manual_score must be 0, 0.5 or 1 (got " +
                               std::to_string(v) + ")");
    }
    r.manual_score = v;
  }
  return r;
}

}  // namespace

void write_review_queue(const std::string& path, const std::vector<EvalQuestion>& questions,
                        const std::vector<EvalResult>& results) {
  std::map<std::string, const EvalQuestion*> by_id;
  for (const auto& q : questions) by_id[q.id] = &q;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write review queue: " + path);
  for (const auto& r : results) {
    json doc = result_to_json(r);
    auto it = by_id.find(r.question_id);
    if (it != by_id.end()) {
      doc["difficulty"] = difficulty_name(it->second->difficulty);
      doc["label"] = it->second->label_text;
    }
    doc["manual_score"] = nullptr;  // reviewer fills this slot
    out << doc.dump() << '\n';
  }
}

std::vector<EvalResult> ingest_review_queue(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read review queue: " + path);
  std::vector<EvalResult> results;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    line_number += 1;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_number) + ": " + e.what());
    }
    results.push_back(result_from_json(doc, line_number));
  }
  return results;
}

void save_questions(const std::string& path, const std::vector<EvalQuestion>& questions) {
  json doc = json::array();
  for (const auto& q : questions) {
    json hosts = json::array();
    for (const auto& h : q.scenario_state.hosts) {
      json files = json::array();
      for (const auto& f : h.suspicious_files) {
        files.push_back({{"name", f.name},
                         {"path", f.path},
                         {"density", f.density},
                         {"signed", f.is_signed}});
      }
      json procs = json::array();
      for (const auto& p : h.suspicious_processes) {
        procs.push_back({{"name", p.name},
                         {"path", p.path},
                         {"density", p.density},
                         {"signed", p.is_signed},
                         {"remote_ip", p.remote_ip},
                         {"port", p.port}});
      }
      hosts.push_back({{"id", h.id},
                       {"generic_label", h.generic_label},
                       {"compromise", static_cast<int>(h.compromise)},
                       {"isolated", h.isolated},
                       {"files", files},
                       {"processes", procs},
                       {"patched", h.decoy_patched}});
    }
    doc.push_back({{"id", q.id},
                   {"difficulty", difficulty_name(q.difficulty)},
                   {"involved_hosts", q.involved_hosts},
                   {"hosts", hosts},
                   {"red_ip", q.scenario_state.red_ip},
                   {"rendered_json", q.rendered_json},
                   {"rendered_sentence", q.rendered_sentence},
                   {"label_index", q.label.to_index(static_cast<int>(hosts.size()))},
                   {"label_text", q.label_text}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write questions: " + path);
  out << doc.dump(2) << '\n';
}

std::vector<EvalQuestion> load_questions(const std::string& path,
                                         const ScenarioConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read questions: " + path);
  json doc = json::parse(in);
  std::vector<EvalQuestion> questions;
  for (const auto& item : doc) {
    EvalQuestion q;
    q.id = item.at("id").get<std::string>();
    q.difficulty = difficulty_from_name(item.at("difficulty").get<std::string>());
    q.involved_hosts = item.at("involved_hosts").get<std::vector<int>>();
    q.scenario_state.red_ip = item.at("red_ip").get<std::string>();
    for (const auto& h : item.at("hosts")) {
      HostSnapshot snap;
      snap.id = h.at("id").get<std::string>();
      snap.generic_label = h.at("generic_label").get<std::string>();
      snap.compromise = static_cast<Compromise>(h.at("compromise").get<int>());
      snap.isolated = h.at("isolated").get<bool>();
      snap.decoy_patched = h.at("patched").get<bool>();
      for (const auto& f : h.at("files")) {
        snap.suspicious_files.push_back({f.at("name").get<std::string>(),
                                         f.at("path").get<std::string>(),
                                         f.at("density").get<double>(),
                                         f.at("signed").get<bool>()});
      }
      for (const auto& p : h.at("processes")) {
        snap.suspicious_processes.push_back(
            {p.at("name").get<std::string>(), p.at("path").get<std::string>(),
             p.at("density").get<double>(), p.at("signed").get<bool>(),
             p.at("remote_ip").get<std::string>(), p.at("port").get<int>()});
      }
      q.scenario_state.hosts.push_back(std::move(snap));
    }
    q.rendered_json = item.at("rendered_json").get<std::string>();
    q.rendered_sentence = item.at("rendered_sentence").get<std::string>();
    q.label = BlueAction::from_index(item.at("label_index").get<int>(), cfg.num_hosts());
    q.label_text = item.at("label_text").get<std::string>();
    questions.push_back(std::move(q));
  }
  return questions;
}

void save_results(const std::string& path, const std::vector<EvalResult>& results) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write results: " + path);
  for (const auto& r : results) out << result_to_json(r).dump() << '\n';
}

}  // namespace cyberteach
