#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "cyberteach/env.hpp"
#include "cyberteach/teacher.hpp"
#include "cyberteach/topology.hpp"

namespace cyberteach {

/// Local OpenAI-compatible chat-completion server backed by the scripted
/// expert: it parses the prompt's network-state section back into a snapshot,
/// picks the expert action, and answers "actionK hostN" with synthetic
/// per-token top-logprob tables derived from the expert's action and host
/// marginals. Used as the test fixture that drives the LLM code path without
/// a model, and available behind the CLI for demos.
class MockLlmServer {
 public:
  explicit MockLlmServer(ScenarioConfig cfg, double expert_temperature = 0.06);
  ~MockLlmServer();

  /// Binds 127.0.0.1 on a free port, serves in a background thread, and
  /// returns the chosen port.
  int start();
  void stop();
  std::string base_url() const;

  long requests() const { return requests_.load(); }

  // Failure-injection knobs for client tests.
  void set_fixed_response(const std::string& body);  // raw body override
  void set_http_status(int status);                  // non-200 responses
  void set_delay_seconds(double seconds);            // sleep before answering

  /// Rebuilds a ground-truth snapshot from a rendered prompt (exposed for
  /// fixture tests).
  GroundTruthSnapshot parse_prompt_state(const std::string& prompt) const;

  /// The response body the server would produce for a prompt.
  std::string response_body_for(const std::string& prompt) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ScenarioConfig cfg_;
  PriorityMap priorities_;
  double expert_temperature_;
  std::atomic<long> requests_{0};
  std::thread server_thread_;
  int port_ = 0;
};

}  // namespace cyberteach
