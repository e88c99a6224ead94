#include "cyberteach/mock_llm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "cyberteach/prompt.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cyberteach {

using nlohmann::json;

struct MockLlmServer::Impl {
  httplib::Server server;
  std::string fixed_response;
  int http_status = 200;
  double delay_seconds = 0.0;
};

MockLlmServer::MockLlmServer(ScenarioConfig cfg, double expert_temperature)
    : impl_(std::make_unique<Impl>()), cfg_(std::move(cfg)),
      priorities_(compute_priorities(cfg_)), expert_temperature_(expert_temperature) {}

MockLlmServer::~MockLlmServer() { stop(); }

GroundTruthSnapshot MockLlmServer::parse_prompt_state(const std::string& prompt) const {
  EnvState blank;
  blank.hosts.assign(cfg_.num_hosts(), HostState{});
  blank.red_ip = "10.0.250.9";
  GroundTruthSnapshot snap = snapshot_of(cfg_, blank);

  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    size_t bar = line.find('|');
    if (bar == std::string::npos) continue;
    int h = cfg_.host_index_by_generic(line.substr(0, bar));
    if (h < 0) continue;
    HostSnapshot& host = snap.hosts[h];

    bool sentence = line.find("Files:") != std::string::npos;
    bool has_files, has_procs, has_scans;
    if (sentence) {
      has_files = line.find("Files: []") == std::string::npos;
      has_procs = line.find("Processes: []") == std::string::npos;
      has_scans = line.find("Scans: []") == std::string::npos;
      host.isolated = line.find(", ISOLATED") != std::string::npos;
    } else {
      has_files = line.find("\"files\":[]") == std::string::npos;
      has_procs = line.find("\"processes\":[]") == std::string::npos;
      has_scans = line.find("\"scans\":[]") == std::string::npos;
      host.isolated = line.find("\"isolated\":true") != std::string::npos;
    }

    bool escalated = line.find("escalate") != std::string::npos;
    if (escalated) {
      host.compromise = Compromise::Privileged;
    } else if (has_procs) {
      host.compromise = Compromise::UserAccess;
    } else if (has_scans) {
      host.compromise = Compromise::Scanned;
    }
    if (has_files) {
      host.suspicious_files.push_back({"cmd.exe", "C:\\temp\\", 0.9, false});
    }
    if (has_procs) {
      host.suspicious_processes.push_back(
          {"shell.exe", "C:\\temp\\", 0.9, false, snap.red_ip, 50000 + h});
    }
  }
  return snap;
}

std::string MockLlmServer::response_body_for(const std::string& prompt) const {
  GroundTruthSnapshot snap = parse_prompt_state(prompt);
  ScriptedExpert expert(cfg_, priorities_, expert_temperature_);
  int n_hosts = cfg_.num_hosts();

  TeacherSignal dist = expert.recommend(snap, SignalMode::Distribution);
  BlueAction best = BlueAction::from_index(dist.argmax(), n_hosts);
  if (best.kind == ActionKind::Monitor) {
    // Monitor has no host token; answer the least-risky equivalent instead.
    best = {ActionKind::Analyse, cfg_.op_server_index()};
  }

  // Marginalize the expert's joint distribution into per-position token
  // distributions, mirroring how a model's token softmax would look.
  std::vector<double> kind_marginal(kTargetedActionKinds, 0.0);
  std::vector<double> host_marginal(n_hosts, 0.0);
  for (int k = 0; k < kTargetedActionKinds; ++k) {
    for (int h = 0; h < n_hosts; ++h) {
      double p = dist.distribution[BlueAction{static_cast<ActionKind>(k), h}.to_index(n_hosts)];
      kind_marginal[k] += p;
      host_marginal[h] += p;
    }
  }
  double kind_mass = 0.0, host_mass = 0.0;
  for (double p : kind_marginal) kind_mass += p;
  for (double p : host_marginal) host_mass += p;
  if (kind_mass > 0.0) {
    for (double& p : kind_marginal) p /= kind_mass;
  }
  if (host_mass > 0.0) {
    for (double& p : host_marginal) p /= host_mass;
  }

  auto top_entries = [](const std::vector<double>& marginal,
                        const std::vector<std::string>& labels, int keep) {
    std::vector<int> order(marginal.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return marginal[a] > marginal[b]; });
    json top = json::array();
    double used = 0.0;
    for (int i = 0; i < keep && i < static_cast<int>(order.size()); ++i) {
      double p = std::max(marginal[order[i]], 1e-9);
      top.push_back({{"token", labels[order[i]]}, {"logprob", std::log(p)}});
      used += p;
    }
    // An out-of-domain token, as a real model's top-k would contain.
    top.push_back({{"token", "zoo"}, {"logprob", std::log(std::max(1e-9, 1.0 - used))}});
    return top;
  };

  std::vector<std::string> action_labels = generic_action_labels();
  std::vector<std::string> host_labels;
  for (const auto& h : cfg_.hosts) host_labels.push_back(" " + h.generic_label);
  // Host tokens carry a leading space, matching byte-pair token conventions.

  std::string action_text = action_labels[static_cast<int>(best.kind)];
  std::string host_text = cfg_.host(best.target).generic_label;

  json tokens = json::array();
  tokens.push_back({{"token", action_text},
                    {"logprob", std::log(std::max(kind_marginal[static_cast<int>(best.kind)],
                                                  1e-9))},
                    {"top_logprobs", top_entries(kind_marginal, action_labels, 4)}});
  tokens.push_back({{"token", " " + host_text},
                    {"logprob", std::log(std::max(host_marginal[best.target], 1e-9))},
                    {"top_logprobs", top_entries(host_marginal, host_labels, 5)}});

  json body = {
      {"id", "mock-1"},
      {"object", "chat.completion"},
      {"model", "mock-expert"},
      {"choices",
       json::array({{{"index", 0},
                     {"message", {{"role", "assistant"},
                                  {"content", action_text + " " + host_text}}},
                     {"logprobs", {{"content", tokens}}},
                     {"finish_reason", "stop"}}})},
  };
  return body.dump();
}

int MockLlmServer::start() {
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
    requests_.fetch_add(1);
    if (impl_->delay_seconds > 0.0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long>(impl_->delay_seconds * 1000)));
    }
    if (impl_->http_status != 200) {
      res.status = impl_->http_status;
      res.set_content("mock failure", "text/plain");
      return;
    }
    if (!impl_->fixed_response.empty()) {
      res.set_content(impl_->fixed_response, "application/json");
      return;
    }
    std::string prompt;
    try {
      json doc = json::parse(req.body);
      prompt = doc.at("messages").at(0).at("content").get<std::string>();
    } catch (const json::exception&) {
      res.status = 400;
      res.set_content("bad request", "text/plain");
      return;
    }
    res.set_content(response_body_for(prompt), "application/json");
  });

  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  server_thread_ = std::thread([this]() { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockLlmServer::stop() {
  if (server_thread_.joinable()) {
    impl_->server.stop();
    server_thread_.join();
  }
}

std::string MockLlmServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_);
}

void MockLlmServer::set_fixed_response(const std::string& body) {
  impl_->fixed_response = body;
}

void MockLlmServer::set_http_status(int status) { impl_->http_status = status; }

void MockLlmServer::set_delay_seconds(double seconds) { impl_->delay_seconds = seconds; }

}  // namespace cyberteach
