#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "cyberteach/evalgen.hpp"
#include "cyberteach/experiment.hpp"
#include "cyberteach/explain.hpp"
#include "cyberteach/guidance.hpp"
#include "cyberteach/llm_client.hpp"
#include "cyberteach/mock_llm.hpp"
#include "cyberteach/ppo.hpp"
#include "cyberteach/prompt.hpp"
#include "json.hpp"

namespace ct = cyberteach;
using nlohmann::json;

namespace {

int cmd_run(CLI::App& app) {
  auto* cmd = app.add_subcommand("run", "Train one experiment campaign");
  struct RunOpts {
    std::string config;
    std::string scenario, technique, teacher, endpoint_url, model, format, output, plot;
    long episodes = -1;
    int runs = -1, workers = -1, decay_start = -1;
    int64_t seed = -1;
    double expert_temperature = -1.0;
  };
  auto opts = std::make_shared<RunOpts>();
  cmd->add_option("--config", opts->config, "experiment config JSON");
  cmd->add_option("--scenario", opts->scenario,
                  "scenario file, builtin:default or builtin:reduced");
  cmd->add_option("--technique", opts->technique,
                  "none|feature-reward|feature-mask|mask-aux-single|mask-aux-distribution");
  cmd->add_option("--episodes", opts->episodes, "episodes per run");
  cmd->add_option("--runs", opts->runs, "independent seeded runs");
  cmd->add_option("--seed", opts->seed, "seed base");
  cmd->add_option("--workers", opts->workers, "parallel run workers");
  cmd->add_option("--teacher", opts->teacher, "scripted|llm");
  cmd->add_option("--endpoint-url", opts->endpoint_url, "LLM endpoint base url");
  cmd->add_option("--model", opts->model, "LLM model name");
  cmd->add_option("--format", opts->format, "prompt format: sentence|json");
  cmd->add_option("--decay-start", opts->decay_start, "guidance decay start episode");
  cmd->add_option("--expert-temperature", opts->expert_temperature,
                  "scripted expert distribution temperature");
  cmd->add_option("--output", opts->output, "output directory");
  cmd->add_option("--plot", opts->plot, "write mean+-SE band SVG to this path");

  cmd->callback([opts]() {
    ct::ExperimentConfig cfg;
    if (!opts->config.empty()) cfg = ct::ExperimentConfig::from_file(opts->config);
    if (!opts->scenario.empty()) cfg.scenario = opts->scenario;
    if (!opts->technique.empty()) cfg.technique = ct::technique_from_name(opts->technique);
    if (opts->episodes >= 0) cfg.episodes = opts->episodes;
    if (opts->runs >= 0) cfg.n_runs = opts->runs;
    if (opts->seed >= 0) cfg.seed_base = static_cast<uint64_t>(opts->seed);
    if (opts->workers >= 0) cfg.workers = opts->workers;
    if (!opts->teacher.empty()) cfg.teacher_kind = opts->teacher;
    if (!opts->endpoint_url.empty()) cfg.llm.endpoint.base_url = opts->endpoint_url;
    if (!opts->model.empty()) cfg.llm.endpoint.model = opts->model;
    if (!opts->format.empty()) cfg.llm.format = ct::prompt_format_from_name(opts->format);
    if (opts->decay_start >= 0) cfg.schedule.decay_start_episode = opts->decay_start;
    if (opts->expert_temperature > 0.0) cfg.expert_temperature = opts->expert_temperature;
    if (!opts->output.empty()) cfg.output_dir = opts->output;
    cfg.schedule.technique = cfg.technique;

    ct::CampaignResult campaign = ct::run_experiment(cfg);
    for (const auto& run : campaign.runs) {
      std::cout << "run " << run.run << ": "
                << (run.aborted ? "ABORTED (" + run.abort_reason + ")" : "ok") << ", "
                << run.rows.size() << " episodes";
      if (!run.rows.empty()) {
        std::cout << ", final avg10 reward " << run.rows.back().reward_avg10;
      }
      std::cout << '\n';
    }
    if (!opts->plot.empty() && !campaign.summary.episodes.empty()) {
      ct::write_summary_svg(opts->plot, campaign.summary, "episode reward (10-ep avg, +-1 SE)");
      std::cout << "plot written to " << opts->plot << '\n';
    }
    if (campaign.failed) {
      std::cerr << "campaign failed; partial outputs preserved under " << cfg.output_dir
                << '\n';
      throw CLI::RuntimeError(1);
    }
    if (!cfg.output_dir.empty()) {
      std::cout << "metrics and summary written under " << cfg.output_dir << '\n';
    }
  });
  return 0;
}

int cmd_compare(CLI::App& app) {
  auto* cmd = app.add_subcommand("compare", "Compare two campaign summaries");
  struct CompareOpts {
    std::string summary_a, summary_b, out;
    long early_window = 0;
  };
  auto opts = std::make_shared<CompareOpts>();
  cmd->add_option("candidate", opts->summary_a, "summary.csv of the candidate (guided) arm")
      ->required();
  cmd->add_option("baseline", opts->summary_b, "summary.csv of the baseline arm")->required();
  cmd->add_option("--early-window", opts->early_window,
                  "episodes in the early-phase means (0 = candidate's guided phase)");
  cmd->add_option("--out", opts->out, "also write the report to this file");

  cmd->callback([opts]() {
    ct::RunSummary a = ct::RunSummary::load(opts->summary_a);
    ct::RunSummary b = ct::RunSummary::load(opts->summary_b);
    ct::ComparisonReport report = ct::compare_summaries(a, b, opts->early_window);
    std::cout << report.render();
    if (!opts->out.empty()) {
      std::ofstream out(opts->out);
      out << report.render();
    }
  });
  return 0;
}

int cmd_diagnose(CLI::App& app) {
  auto* cmd = app.add_subcommand("diagnose", "Top-3 action probabilities of a checkpoint");
  struct DiagOpts {
    std::string checkpoint, scenario;
  };
  auto opts = std::make_shared<DiagOpts>();
  cmd->add_option("--checkpoint", opts->checkpoint, "trainer checkpoint JSON")->required();
  cmd->add_option("--scenario", opts->scenario, "override the checkpoint's scenario");

  cmd->callback([opts]() {
    ct::PpoTrainer trainer = ct::PpoTrainer::load_checkpoint(opts->checkpoint);
    std::ifstream in(opts->checkpoint);
    std::stringstream buf;
    buf << in.rdbuf();
    json meta = json::parse(ct::PpoTrainer::checkpoint_meta(buf.str()));

    std::string scenario_name =
        !opts->scenario.empty() ? opts->scenario : meta.value("scenario", "builtin:default");
    ct::ScenarioConfig scenario = ct::resolve_scenario(scenario_name);
    ct::CanonicalState canonical = ct::canonical_base_state(scenario);

    std::vector<double> state = canonical.observation;
    if (meta.value("augmented", false)) {
      ct::ScriptedExpert expert(scenario, ct::compute_priorities(scenario));
      ct::TeacherSignal signal =
          expert.recommend(canonical.info, ct::SignalMode::SingleAction);
      state = ct::augment_observation(ct::Observation{state}, signal,
                                      meta.at("action_space").get<int>());
    }
    std::cout << ct::diagnose_peakedness(trainer.params(), state).render();
  });
  return 0;
}

int cmd_evalgen(CLI::App& app) {
  auto* cmd = app.add_subcommand("evalgen", "Question generation, scoring and review");
  cmd->require_subcommand(1);

  auto* gen = cmd->add_subcommand("generate", "Generate constrained questions");
  struct GenOpts {
    std::string scenario = "builtin:default";
    std::string out = "questions.json";
    int easy = 20, medium = 40, hard = 40;
    int64_t seed = 7;
  };
  auto gen_opts = std::make_shared<GenOpts>();
  gen->add_option("--scenario", gen_opts->scenario, "scenario");
  gen->add_option("--easy", gen_opts->easy, "easy question count");
  gen->add_option("--medium", gen_opts->medium, "medium question count");
  gen->add_option("--hard", gen_opts->hard, "hard question count");
  gen->add_option("--seed", gen_opts->seed, "generator seed");
  gen->add_option("--out", gen_opts->out, "question set file");
  gen->callback([gen_opts]() {
    ct::ScenarioConfig scenario = ct::resolve_scenario(gen_opts->scenario);
    auto questions = ct::generate_questions(
        scenario, ct::compute_priorities(scenario),
        {gen_opts->easy, gen_opts->medium, gen_opts->hard},
        static_cast<uint64_t>(gen_opts->seed));
    ct::save_questions(gen_opts->out, questions);
    std::cout << questions.size() << " questions written to " << gen_opts->out << '\n';
  });

  auto* ask = cmd->add_subcommand("ask", "Query an endpoint with every question");
  struct AskOpts {
    std::string scenario = "builtin:default";
    std::string questions = "questions.json";
    std::string out = "responses.jsonl";
    std::string endpoint_url, model = "local";
  };
  auto ask_opts = std::make_shared<AskOpts>();
  ask->add_option("--scenario", ask_opts->scenario, "scenario");
  ask->add_option("--questions", ask_opts->questions, "question set file");
  ask->add_option("--endpoint-url", ask_opts->endpoint_url, "LLM endpoint base url")
      ->required();
  ask->add_option("--model", ask_opts->model, "model name");
  ask->add_option("--out", ask_opts->out, "responses file (JSON lines)");
  ask->callback([ask_opts]() {
    ct::ScenarioConfig scenario = ct::resolve_scenario(ask_opts->scenario);
    auto questions = ct::load_questions(ask_opts->questions, scenario);
    ct::LlmEndpointConfig endpoint;
    endpoint.base_url = ask_opts->endpoint_url;
    endpoint.model = ask_opts->model;
    ct::LlmClient client(endpoint);

    std::ofstream out(ask_opts->out);
    for (const auto& q : questions) {
      for (const char* format : {"json", "sentence"}) {
        const std::string& prompt =
            std::string(format) == "json" ? q.rendered_json : q.rendered_sentence;
        ct::LlmCompletion completion = client.query(prompt);
        json row = {{"id", q.id},
                    {"format", format},
                    {"response",
                     completion.status == ct::LlmStatus::Ok ? completion.completion : ""}};
        out << row.dump() << '\n';
      }
    }
    std::cout << "responses written to " << ask_opts->out << '\n';
  });

  auto* score = cmd->add_subcommand("score", "Score responses and emit the review queue");
  struct ScoreOpts {
    std::string scenario = "builtin:default";
    std::string questions = "questions.json";
    std::string responses = "responses.jsonl";
    std::string results = "results.jsonl";
    std::string review = "review_queue.jsonl";
  };
  auto score_opts = std::make_shared<ScoreOpts>();
  score->add_option("--scenario", score_opts->scenario, "scenario");
  score->add_option("--questions", score_opts->questions, "question set file");
  score->add_option("--responses", score_opts->responses, "responses file");
  score->add_option("--results", score_opts->results, "scored results file");
  score->add_option("--review-queue", score_opts->review, "review queue file");
  score->callback([score_opts]() {
    ct::ScenarioConfig scenario = ct::resolve_scenario(score_opts->scenario);
    auto questions = ct::load_questions(score_opts->questions, scenario);

    std::vector<ct::ResponseRecord> responses;
    std::ifstream in(score_opts->responses);
    if (!in) throw CLI::ValidationError("cannot open responses: " + score_opts->responses);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json doc = json::parse(line);
      responses.push_back({doc.at("id").get<std::string>(),
                           doc.at("format").get<std::string>(),
                           doc.at("response").get<std::string>()});
    }

    ct::SimilarityScorer scorer;
    auto results = ct::score_responses(questions, responses, scorer);
    ct::save_results(score_opts->results, results);
    ct::write_review_queue(score_opts->review, questions, results);
    std::cout << ct::render_summary(ct::summarize_precision(questions, results));
    std::cout << "results: " << score_opts->results << ", review queue: "
              << score_opts->review << '\n';
  });

  auto* ingest = cmd->add_subcommand("ingest", "Validate a filled review queue");
  struct IngestOpts {
    std::string scenario = "builtin:default";
    std::string questions = "questions.json";
    std::string review = "review_queue.jsonl";
  };
  auto ingest_opts = std::make_shared<IngestOpts>();
  ingest->add_option("--scenario", ingest_opts->scenario, "scenario");
  ingest->add_option("--questions", ingest_opts->questions, "question set file");
  ingest->add_option("--review", ingest_opts->review, "filled review queue");
  ingest->callback([ingest_opts]() {
    ct::ScenarioConfig scenario = ct::resolve_scenario(ingest_opts->scenario);
    auto questions = ct::load_questions(ingest_opts->questions, scenario);
    auto results = ct::ingest_review_queue(ingest_opts->review);
    std::cout << ct::render_summary(ct::summarize_manual(questions, results));
  });
  return 0;
}

int cmd_explain(CLI::App& app) {
  auto* cmd = app.add_subcommand("explain", "Local feature attribution for a checkpoint");
  struct ExplainOpts {
    std::string checkpoint, scenario, out = "attribution.csv";
    long episode = 0;
    int n_perturb = 2000, background = 500;
    int64_t seed = 11;
  };
  auto opts = std::make_shared<ExplainOpts>();
  cmd->add_option("--checkpoint", opts->checkpoint, "trainer checkpoint JSON")->required();
  cmd->add_option("--scenario", opts->scenario, "override the checkpoint's scenario");
  cmd->add_option("--out", opts->out, "report CSV path");
  cmd->add_option("--episode", opts->episode, "episode label for the report rows");
  cmd->add_option("--n-perturb", opts->n_perturb, "perturbation count");
  cmd->add_option("--background", opts->background, "background observation count");
  cmd->add_option("--seed", opts->seed, "perturbation seed");

  cmd->callback([opts]() {
    ct::PpoTrainer trainer = ct::PpoTrainer::load_checkpoint(opts->checkpoint);
    std::ifstream in(opts->checkpoint);
    std::stringstream buf;
    buf << in.rdbuf();
    json meta = json::parse(ct::PpoTrainer::checkpoint_meta(buf.str()));

    std::string scenario_name =
        !opts->scenario.empty() ? opts->scenario : meta.value("scenario", "builtin:default");
    ct::ScenarioConfig scenario = ct::resolve_scenario(scenario_name);
    bool augmented = meta.value("augmented", false);
    int action_space = meta.at("action_space").get<int>();

    ct::CanonicalState canonical = ct::canonical_base_state(scenario);
    ct::ScriptedExpert expert(scenario, ct::compute_priorities(scenario));
    ct::TeacherSignal signal = expert.recommend(canonical.info, ct::SignalMode::SingleAction);

    std::vector<double> base = canonical.observation;
    int teacher_feature = -1;
    if (augmented) {
      base = ct::augment_observation(ct::Observation{base}, signal, action_space);
      teacher_feature =
          static_cast<int>(canonical.observation.size()) + signal.action_index;
    }

    auto background = ct::collect_background(
        scenario, ct::RewardModel{}, trainer.params(), augmented, opts->background,
        static_cast<uint64_t>(opts->seed) + 1);

    std::vector<double> base_policy =
        ct::policy_forward(trainer.params(), base).probs;
    int target_action = 0;
    for (size_t i = 1; i < base_policy.size(); ++i) {
      if (base_policy[i] > base_policy[target_action]) target_action = static_cast<int>(i);
    }
    auto target_fn = [&](const std::vector<double>& z) {
      return ct::policy_forward(trainer.params(), z).probs[target_action];
    };

    ct::LimeConfig lime;
    lime.n_perturb = opts->n_perturb;
    ct::AttributionReport report = ct::fit_local_explainer(
        target_fn, base, background, lime, static_cast<uint64_t>(opts->seed));
    ct::annotate_teacher_columns(report, base_policy, signal.action_index, teacher_feature);

    std::ofstream out(opts->out);
    out << ct::report_csv(report, opts->episode);
    std::cout << "attribution written to " << opts->out;
    if (teacher_feature >= 0) {
      const auto& f = report.features[teacher_feature];
      std::cout << " (teacher one-hot feature: weight " << f.weight << ", rank " << f.rank
                << ", " << (f.towards ? "Towards" : "Away") << ", reco in top 4: "
                << (report.reco_in_top4 ? "Yes/" + std::to_string(report.teacher_action_rank)
                                        : "No")
                << ")";
    }
    std::cout << '\n';
  });
  return 0;
}

int cmd_scenario(CLI::App& app) {
  auto* cmd = app.add_subcommand("scenario", "Inspect or export a scenario");
  struct ScenOpts {
    std::string name = "builtin:default";
    std::string out;
  };
  auto opts = std::make_shared<ScenOpts>();
  cmd->add_option("--name", opts->name, "scenario name or path");
  cmd->add_option("--out", opts->out, "write the scenario file here");
  cmd->callback([opts]() {
    ct::ScenarioConfig scenario = ct::resolve_scenario(opts->name);
    ct::PriorityMap pm = ct::compute_priorities(scenario);
    std::cout << scenario.num_hosts() << " hosts, " << scenario.subnets.size()
              << " subnets, op server " << scenario.op_server << '\n';
    for (const auto& id : pm.critical_path_hosts) {
      int idx = scenario.host_index(id);
      std::cout << "  " << scenario.host(idx).generic_label << " (" << id << "): "
                << pm.hops_of(id) << " hops\n";
    }
    if (!opts->out.empty()) {
      std::ofstream out(opts->out);
      out << ct::scenario_to_text(scenario);
      std::cout << "written to " << opts->out << '\n';
    }
  });
  return 0;
}

int cmd_mock_llm(CLI::App& app) {
  auto* cmd = app.add_subcommand("mock-llm", "Serve the scripted expert as a chat endpoint");
  struct MockOpts {
    std::string scenario = "builtin:default";
    double temperature = 0.06;
  };
  auto opts = std::make_shared<MockOpts>();
  cmd->add_option("--scenario", opts->scenario, "scenario");
  cmd->add_option("--expert-temperature", opts->temperature, "expert distribution temperature");
  cmd->callback([opts]() {
    ct::MockLlmServer server(ct::resolve_scenario(opts->scenario), opts->temperature);
    int port = server.start();
    std::cout << "mock chat-completion endpoint at http://127.0.0.1:" << port
              << " (ctrl-c to stop)" << std::endl;
    while (true) std::this_thread::sleep_for(std::chrono::seconds(1));
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher-guided PPO for autonomous cyber defense"};
  app.require_subcommand(1);

  cmd_run(app);
  cmd_compare(app);
  cmd_diagnose(app);
  cmd_evalgen(app);
  cmd_explain(app);
  cmd_scenario(app);
  cmd_mock_llm(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
