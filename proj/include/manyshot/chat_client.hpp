#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace manyshot {

struct EndpointConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8000/v1"
  std::string model_id;
  std::string api_key_env;  // name of the environment variable holding the key
  double timeout_s = 600.0;
  int max_retries = 3;
  int parallelism = 4;
  std::chrono::milliseconds backoff_base{500};
  // Merged verbatim into every request body (e.g. {"reasoning": {"effort": "minimal"}}).
  nlohmann::json extra_body = nlohmann::json::object();

  void validate() const;
};

struct DecodingConfig {
  double temperature = 0.7;
  int max_output_tokens = 1024;
  std::vector<std::string> stop;

  void validate() const;
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::optional<double> temperature;  // unset: the endpoint's default
  std::optional<int> max_tokens;
  std::vector<std::string> stop;
  std::optional<std::uint64_t> seed;
  nlohmann::json extra_body = nlohmann::json::object();  // merged after the endpoint's
};

struct ChatResponse {
  std::string content;
  std::optional<std::uint64_t> prompt_tokens;
  std::optional<std::uint64_t> completion_tokens;
  bool truncated = false;  // finish_reason == "length"
  int attempts = 1;
  std::int64_t latency_ms = 0;
};

enum class TransportKind { connection, timeout, http_status, protocol };

class TransportError : public std::runtime_error {
 public:
  TransportError(TransportKind kind, int status, const std::string& what)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  TransportKind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }
  // Connection failures, timeouts, 429 and 5xx are retried; other 4xx are not.
  bool retryable() const noexcept;

 private:
  TransportKind kind_;
  int status_;
};

class EndpointUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One chat-completions round trip, no retries. Safe to call concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) const = 0;
};

// OpenAI-compatible POST {base_url}/chat/completions over HTTP or HTTPS.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(EndpointConfig config);
  ChatResponse complete(const ChatRequest& request) const override;
  const EndpointConfig& config() const { return config_; }

  nlohmann::json request_body(const ChatRequest& request) const;

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
};

// Retries retryable transport errors with exponential backoff plus jitter;
// rethrows the last error once retries are exhausted.
ChatResponse complete_with_retry(const ChatBackend& backend, const ChatRequest& request,
                                 const RetryPolicy& policy);

void backoff_sleep(std::chrono::milliseconds base, int attempt);

}  // namespace manyshot
