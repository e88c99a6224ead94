#include "cyberteach/llm_client.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace cyberteach {

using nlohmann::json;

const char* llm_status_name(LlmStatus s) {
  switch (s) {
    case LlmStatus::Ok: return "ok";
    case LlmStatus::Timeout: return "timeout";
    case LlmStatus::HttpError: return "http-error";
    case LlmStatus::MalformedBody: return "malformed-body";
  }
  return "?";
}

uint64_t fnv1a64(const std::string& data) {
  uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

LlmClient::LlmClient(LlmEndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.cache_enabled && !cfg_.cache_dir.empty()) {
    std::filesystem::create_directories(cfg_.cache_dir);
  }
}

uint64_t LlmClient::cache_key(const std::string& prompt) const {
  std::ostringstream key;
  key << cfg_.model << '\x1f' << cfg_.temperature << '\x1f' << cfg_.max_tokens << '\x1f'
      << cfg_.logprobs << '\x1f' << cfg_.top_logprobs << '\x1f' << prompt;
  return fnv1a64(key.str());
}

std::optional<std::string> LlmClient::cache_lookup(uint64_t key) {
  auto it = memory_cache_.find(key);
  if (it != memory_cache_.end()) return it->second;
  if (cfg_.cache_dir.empty()) return std::nullopt;
  std::ostringstream name;
  name << std::hex << key;
  std::ifstream in(std::filesystem::path(cfg_.cache_dir) / (name.str() + ".json"));
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  memory_cache_[key] = buf.str();
  return buf.str();
}

void LlmClient::cache_store(uint64_t key, const std::string& body) {
  memory_cache_[key] = body;
  if (cfg_.cache_dir.empty()) return;
  std::ostringstream name;
  name << std::hex << key;
  std::ofstream out(std::filesystem::path(cfg_.cache_dir) / (name.str() + ".json"));
  out << body;
}

LlmCompletion LlmClient::parse_response_body(const std::string& body) {
  LlmCompletion out;
  json doc;
  try {
    doc = json::parse(body);
    const json& choice = doc.at("choices").at(0);
    out.completion = choice.at("message").at("content").get<std::string>();
    if (choice.contains("logprobs") && choice.at("logprobs").is_object() &&
        choice.at("logprobs").contains("content")) {
      for (const auto& entry : choice.at("logprobs").at("content")) {
        TokenTopLogprobs tok;
        tok.token = entry.at("token").get<std::string>();
        tok.logprob = entry.at("logprob").get<double>();
        if (entry.contains("top_logprobs")) {
          for (const auto& alt : entry.at("top_logprobs")) {
            tok.top.emplace_back(alt.at("token").get<std::string>(),
                                 alt.at("logprob").get<double>());
          }
        }
        out.tokens.push_back(std::move(tok));
      }
    }
  } catch (const json::exception& e) {
    out.status = LlmStatus::MalformedBody;
    out.detail = e.what();
  }
  return out;
}

LlmCompletion LlmClient::query(const std::string& prompt) {
  uint64_t key = cache_key(prompt);
  if (cfg_.cache_enabled) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto body = cache_lookup(key)) {
      cache_hits_ += 1;
      LlmCompletion out = parse_response_body(*body);
      out.from_cache = true;
      return out;
    }
  }

  json request = {
      {"model", cfg_.model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg_.temperature},
      {"max_tokens", cfg_.max_tokens},
  };
  if (cfg_.logprobs) {
    request["logprobs"] = true;
    request["top_logprobs"] = cfg_.top_logprobs;
  }

  httplib::Client client(cfg_.base_url);
  time_t secs = static_cast<time_t>(cfg_.timeout_seconds);
  time_t usecs = static_cast<time_t>((cfg_.timeout_seconds - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  if (const char* api_key = std::getenv(cfg_.api_key_env.c_str());
      api_key != nullptr && *api_key != '\0') {
    client.set_bearer_token_auth(api_key);
  }

  {
    std::lock_guard<std::mutex> lock(mutex_);
    network_calls_ += 1;
  }
  httplib::Result res = client.Post("/v1/chat/completions", request.dump(),
                                    "application/json");
  LlmCompletion out;
  if (!res) {
    // Read failures on an established connection surface as timeouts here;
    // everything else is a transport-level HTTP error.
    httplib::Error err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      out.status = LlmStatus::Timeout;
    } else {
      out.status = LlmStatus::HttpError;
    }
    out.detail = httplib::to_string(err);
    return out;
  }
  out.http_status = res->status;
  if (res->status < 200 || res->status >= 300) {
    out.status = LlmStatus::HttpError;
    out.detail = "http status " + std::to_string(res->status);
    return out;
  }

  LlmCompletion parsed = parse_response_body(res->body);
  parsed.http_status = res->status;
  if (parsed.status == LlmStatus::Ok && cfg_.cache_enabled) {
    std::lock_guard<std::mutex> lock(mutex_);
    cache_store(key, res->body);
  }
  return parsed;
}

EmbeddingHttpClient::EmbeddingHttpClient(std::string base_url, std::string model,
                                         double timeout_seconds)
    : base_url_(std::move(base_url)), model_(std::move(model)),
      timeout_seconds_(timeout_seconds) {}

std::optional<std::vector<double>> EmbeddingHttpClient::embed(const std::string& token) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(token);
    if (it != cache_.end()) return it->second;
  }

  httplib::Client client(base_url_);
  time_t secs = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);

  json request = {{"model", model_}, {"input", json::array({token})}};
  httplib::Result res = client.Post("/v1/embeddings", request.dump(), "application/json");

  std::optional<std::vector<double>> result;
  if (res && res->status >= 200 && res->status < 300) {
    try {
      json doc = json::parse(res->body);
      result = doc.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
      result = std::nullopt;
    }
  }
  std::lock_guard<std::mutex> lock(mutex_);
  cache_[token] = result;
  return result;
}

}  // namespace cyberteach
