#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace manyshot {

struct MockRequest {
  std::string model;
  std::string system_text;
  std::string user_text;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::optional<std::uint64_t> seed;
  std::string raw_body;
  std::uint64_t sequence = 0;  // 0-based arrival order
};

struct MockReply {
  int status = 200;
  std::string content;
  std::string finish_reason = "stop";
  bool include_usage = true;
  int delay_ms = 0;
};

using MockResponder = std::function<MockReply(const MockRequest&)>;

// Text after the last newline of the user message: the sentence to translate
// in both the evaluation and the synthesis prompt layouts.
std::string last_line(const std::string& text);

// Deterministic "model": echoes the query sentence with seeded word-level
// noise (drops, duplications, swaps) whose rate falls as the prompt grows, and
// truncates to max_tokens whitespace words.
MockReply echo_with_noise(const MockRequest& request);
// Echoes the query sentence uppercased (ASCII).
MockReply uppercase_echo(const MockRequest& request);

// In-process OpenAI-compatible chat-completions server on 127.0.0.1.
class MockChatServer {
 public:
  explicit MockChatServer(MockResponder responder = echo_with_noise, int port = 0);
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  int port() const { return port_; }
  std::string base_url() const;
  std::uint64_t request_count() const { return count_.load(); }
  std::vector<MockRequest> requests() const;
  void stop();

  // Blocks serving until stop() is called from another thread or a signal.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  MockResponder responder_;
  int port_ = 0;
  std::atomic<std::uint64_t> count_{0};
  mutable std::mutex mu_;
  std::vector<MockRequest> log_;
  std::thread thread_;
};

}  // namespace manyshot
