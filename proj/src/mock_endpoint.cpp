#include "manyshot/mock_endpoint.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "manyshot/unicode.hpp"

namespace manyshot {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::uint64_t word_count(std::string_view text) { return unicode::split_whitespace(text).size(); }

}  // namespace

std::string last_line(const std::string& text) {
  const auto nl = text.rfind('\n');
  return nl == std::string::npos ? text : text.substr(nl + 1);
}

MockReply echo_with_noise(const MockRequest& request) {
  std::uint64_t h = fnv1a(request.system_text);
  h = fnv1a("\x1f", h);
  h = fnv1a(request.user_text, h);
  if (request.seed) h = fnv1a(std::to_string(*request.seed), h);
  std::mt19937_64 rng(h);

  const double rate =
      0.4 / (1.0 + std::log2(1.0 + static_cast<double>(request.user_text.size()) / 256.0));
  const std::string sentence = last_line(request.user_text);
  std::vector<std::string> words;
  for (auto w : unicode::split_whitespace(sentence)) words.emplace_back(w);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double r = unit(rng);
    if (r < rate / 3.0) continue;
    out.push_back(words[i]);
    if (r < 2.0 * rate / 3.0) {
      out.push_back(words[i]);
    } else if (r < rate && i + 1 < words.size()) {
      out.back() = words[i + 1];
      out.push_back(words[i]);
      ++i;
    }
  }
  MockReply reply;
  if (request.max_tokens && out.size() > static_cast<std::size_t>(*request.max_tokens)) {
    out.resize(static_cast<std::size_t>(*request.max_tokens));
    reply.finish_reason = "length";
  }
  reply.content = join(out);
  return reply;
}

MockReply uppercase_echo(const MockRequest& request) {
  MockReply reply;
  reply.content = last_line(request.user_text);
  for (char& c : reply.content) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return reply;
}

struct MockChatServer::Impl {
  httplib::Server server;
};

MockChatServer::MockChatServer(MockResponder responder, int port)
    : impl_(std::make_unique<Impl>()), responder_(std::move(responder)) {
  impl_->server.Post(R"(.*/chat/completions)", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
    MockRequest mreq;
    mreq.raw_body = req.body;
    try {
      const json body = json::parse(req.body);
      mreq.model = body.value("model", std::string());
      for (const auto& m : body.at("messages")) {
        const auto role = m.at("role").get<std::string>();
        if (role == "system") mreq.system_text = m.at("content").get<std::string>();
        if (role == "user") mreq.user_text = m.at("content").get<std::string>();
      }
      if (body.contains("temperature")) mreq.temperature = body["temperature"].get<double>();
      if (body.contains("max_tokens")) mreq.max_tokens = body["max_tokens"].get<int>();
      if (body.contains("seed")) mreq.seed = body["seed"].get<std::uint64_t>();
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    {
      std::lock_guard lock(mu_);
      mreq.sequence = count_.fetch_add(1);
      log_.push_back(mreq);
    }
    const MockReply reply = responder_(mreq);
    if (reply.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(reply.delay_ms));
    res.status = reply.status;
    if (reply.status != 200) {
      res.set_content(json{{"error", {{"message", "injected failure"}}}}.dump(), "application/json");
      return;
    }
    json body = {
        {"id", "mock-" + std::to_string(mreq.sequence)},
        {"object", "chat.completion"},
        {"model", mreq.model},
        {"choices",
         json::array({{{"index", 0},
                       {"message", {{"role", "assistant"}, {"content", reply.content}}},
                       {"finish_reason", reply.finish_reason}}})},
    };
    if (reply.include_usage) {
      body["usage"] = {{"prompt_tokens", word_count(mreq.system_text) + word_count(mreq.user_text)},
                       {"completion_tokens", word_count(reply.content)}};
    }
    res.set_content(body.dump(), "application/json");
  });

  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw std::runtime_error("mock endpoint could not bind a port");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockChatServer::~MockChatServer() { stop(); }

std::string MockChatServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

std::vector<MockRequest> MockChatServer::requests() const {
  std::lock_guard lock(mu_);
  return log_;
}

void MockChatServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

void MockChatServer::wait() {
  if (thread_.joinable()) thread_.join();
}

}  // namespace manyshot
