#include "manyshot/chat_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <random>
#include <thread>

namespace manyshot {

using nlohmann::json;

void EndpointConfig::validate() const {
  if (base_url.empty()) throw std::invalid_argument("endpoint base_url is required");
  if (parallelism < 1) throw std::invalid_argument("endpoint parallelism must be >= 1");
  if (!(timeout_s > 0.0)) throw std::invalid_argument("endpoint timeout must be positive");
  if (max_retries < 0) throw std::invalid_argument("endpoint max_retries must be >= 0");
}

void DecodingConfig::validate() const {
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (max_output_tokens < 1) throw std::invalid_argument("max_output_tokens must be >= 1");
}

bool TransportError::retryable() const noexcept {
  switch (kind_) {
    case TransportKind::connection:
    case TransportKind::timeout:
      return true;
    case TransportKind::http_status:
      return status_ == 429 || status_ >= 500;
    case TransportKind::protocol:
      return false;
  }
  return false;
}

HttpChatBackend::HttpChatBackend(EndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint base_url needs a scheme: " + config_.base_url);
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

json HttpChatBackend::request_body(const ChatRequest& request) const {
  json messages = json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  json body = {{"model", config_.model_id}, {"messages", messages}};
  if (request.temperature) body["temperature"] = *request.temperature;
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  if (!request.stop.empty()) body["stop"] = request.stop;
  if (request.seed) body["seed"] = *request.seed;
  for (const auto& [k, v] : config_.extra_body.items()) body[k] = v;
  for (const auto& [k, v] : request.extra_body.items()) body[k] = v;
  return body;
}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) const {
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(config_.timeout_s * 1000));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, request_body(request).dump(), "application/json");
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                           err == httplib::Error::ConnectionTimeout;
    throw TransportError(timed_out ? TransportKind::timeout : TransportKind::connection, 0,
                         "request failed: " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw TransportError(TransportKind::http_status, res->status,
                         "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }

  ChatResponse out;
  out.latency_ms = elapsed.count();
  try {
    const json body = json::parse(res->body);
    const json& choice = body.at("choices").at(0);
    const json& content = choice.at("message").at("content");
    out.content = content.is_string() ? content.get<std::string>() : std::string();
    out.truncated = choice.value("finish_reason", json()).is_string() &&
                    choice.at("finish_reason").get<std::string>() == "length";
    if (auto usage = body.find("usage"); usage != body.end() && usage->is_object()) {
      if (usage->contains("prompt_tokens") && usage->at("prompt_tokens").is_number_unsigned()) {
        out.prompt_tokens = usage->at("prompt_tokens").get<std::uint64_t>();
      }
      if (usage->contains("completion_tokens") &&
          usage->at("completion_tokens").is_number_unsigned()) {
        out.completion_tokens = usage->at("completion_tokens").get<std::uint64_t>();
      }
    }
  } catch (const json::exception& e) {
    throw TransportError(TransportKind::protocol, res->status,
                         std::string("malformed chat-completions response: ") + e.what());
  }
  return out;
}

void backoff_sleep(std::chrono::milliseconds base, int attempt) {
  if (base.count() <= 0) return;
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto scaled = base.count() * (std::int64_t{1} << std::min(attempt, 16));
  std::uniform_int_distribution<std::int64_t> jitter(0, base.count());
  std::this_thread::sleep_for(std::chrono::milliseconds(scaled + jitter(rng)));
}

ChatResponse complete_with_retry(const ChatBackend& backend, const ChatRequest& request,
                                 const RetryPolicy& policy) {
  for (int attempt = 0;; ++attempt) {
    try {
      ChatResponse r = backend.complete(request);
      r.attempts = attempt + 1;
      return r;
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= policy.max_retries) throw;
      backoff_sleep(policy.backoff_base, attempt);
    }
  }
}

}  // namespace manyshot
