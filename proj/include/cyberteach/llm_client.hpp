#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cyberteach/similarity.hpp"

namespace cyberteach {

struct LlmEndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string model = "local";
  double temperature = 0.0;
  int max_tokens = 24;
  bool logprobs = true;
  int top_logprobs = 20;
  double timeout_seconds = 10.0;
  bool cache_enabled = true;
  std::string cache_dir;  // empty: in-memory cache only
  std::string api_key_env = "CYBERTEACH_API_KEY";
};

/// One generated token with its top-k alternatives at that position.
struct TokenTopLogprobs {
  std::string token;
  double logprob = 0.0;
  std::vector<std::pair<std::string, double>> top;
};

enum class LlmStatus { Ok, Timeout, HttpError, MalformedBody };

const char* llm_status_name(LlmStatus s);

struct LlmCompletion {
  LlmStatus status = LlmStatus::Ok;
  std::string completion;
  std::vector<TokenTopLogprobs> tokens;
  bool from_cache = false;
  int http_status = 0;
  std::string detail;
};

/// Blocking chat-completion client (OpenAI-compatible JSON protocol) with an
/// optional prompt-keyed response cache. Identical prompts are served from
/// cache without touching the network.
class LlmClient {
 public:
  explicit LlmClient(LlmEndpointConfig cfg);

  LlmCompletion query(const std::string& prompt);

  long network_calls() const { return network_calls_; }
  long cache_hits() const { return cache_hits_; }
  const LlmEndpointConfig& config() const { return cfg_; }

  /// Parses a raw chat-completion response body (exposed for fixture tests).
  static LlmCompletion parse_response_body(const std::string& body);

 private:
  uint64_t cache_key(const std::string& prompt) const;
  std::optional<std::string> cache_lookup(uint64_t key);
  void cache_store(uint64_t key, const std::string& body);

  LlmEndpointConfig cfg_;
  std::mutex mutex_;
  std::unordered_map<uint64_t, std::string> memory_cache_;
  long network_calls_ = 0;
  long cache_hits_ = 0;
};

/// Token embeddings over an OpenAI-compatible /v1/embeddings endpoint with an
/// in-memory per-token cache. Failures return nullopt so scoring can fall
/// back to exact matching.
class EmbeddingHttpClient final : public TokenEmbedder {
 public:
  EmbeddingHttpClient(std::string base_url, std::string model,
                      double timeout_seconds = 10.0);
  std::optional<std::vector<double>> embed(const std::string& token) override;

 private:
  std::string base_url_;
  std::string model_;
  double timeout_seconds_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::optional<std::vector<double>>> cache_;
};

uint64_t fnv1a64(const std::string& data);

}  // namespace cyberteach
