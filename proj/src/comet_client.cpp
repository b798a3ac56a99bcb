#include "manyshot/comet_client.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <nlohmann/json.hpp>
#include <thread>

namespace manyshot {

using nlohmann::json;

namespace {

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

CometSidecar::CometSidecar(std::vector<std::string> argv) {
  if (argv.empty()) throw CometError(CometErrc::spawn_failed, "empty sidecar command");
  // A dead child must surface as EPIPE, not kill the client.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw CometError(CometErrc::spawn_failed, std::string("pipe: ") + std::strerror(errno));
  }
  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) throw CometError(CometErrc::spawn_failed, std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  const auto line = read_line();
  if (!line) {
    close();
    throw CometError(CometErrc::handshake_failed, "sidecar exited before the handshake: " + argv[0]);
  }
  json hs;
  try {
    hs = json::parse(*line);
  } catch (const json::exception&) {
    close();
    throw CometError(CometErrc::handshake_failed, "handshake is not JSON: " + line->substr(0, 120));
  }
  if (hs.contains("error")) {
    close();
    throw CometError(CometErrc::handshake_failed, "sidecar could not load its model: " + hs["error"].dump());
  }
  if (!hs.contains("protocol") || hs["protocol"] != kCometProtocol) {
    close();
    throw CometError(CometErrc::handshake_failed, "unsupported sidecar protocol: " + *line);
  }
  model_ = hs.contains("model") && hs["model"].is_string() ? hs["model"].get<std::string>()
                                                           : hs.value("model", json()).dump();
}

CometSidecar::~CometSidecar() { close(); }

std::optional<std::string> CometSidecar::read_line() {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<CometResponse> CometSidecar::score_batch(const std::vector<CometRequest>& requests) {
  std::vector<CometResponse> out;
  if (requests.empty()) return out;
  if (broken_ || pid_ < 0) throw CometError(CometErrc::sidecar_crashed, "sidecar is not running");

  std::string payload;
  for (const auto& r : requests) {
    payload += json{{"id", r.id}, {"src", r.src}, {"mt", r.mt}, {"ref", r.ref}}.dump();
    payload += '\n';
  }
  // A separate writer keeps both pipes draining when the batch exceeds the pipe buffer.
  bool write_ok = true;
  std::thread writer([&] { write_ok = write_all(to_child_, payload); });

  std::optional<CometError> failure;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    const auto line = read_line();
    if (!line) {
      failure = CometError(CometErrc::sidecar_crashed,
                           "sidecar exited after " + std::to_string(out.size()) + " of " +
                               std::to_string(requests.size()) + " responses");
      break;
    }
    try {
      const json j = json::parse(*line);
      CometResponse resp;
      resp.id = j.at("id").get<long long>();
      if (resp.id != req.id) {
        failure = CometError(CometErrc::protocol_violation,
                             "expected id " + std::to_string(req.id) + ", got " + std::to_string(resp.id));
        break;
      }
      const bool has_score = j.contains("score") && !j["score"].is_null();
      const bool has_error = j.contains("error") && !j["error"].is_null();
      if (has_score == has_error) {
        failure = CometError(CometErrc::protocol_violation, "response needs exactly one of score/error");
        break;
      }
      if (has_score) resp.score = j["score"].get<double>();
      if (has_error) resp.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
      out.push_back(std::move(resp));
    } catch (const json::exception& e) {
      failure = CometError(CometErrc::protocol_violation, std::string("malformed response: ") + e.what());
      break;
    }
  }
  if (failure) {
    broken_ = true;
    // A killed child turns any blocked write into EPIPE.
    ::kill(pid_, SIGKILL);
    writer.join();
    throw *failure;
  }
  writer.join();
  if (!write_ok) {
    broken_ = true;
    throw CometError(CometErrc::sidecar_crashed, "sidecar closed its input");
  }
  return out;
}

int CometSidecar::close() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  int status = 0;
  if (pid_ > 0) {
    if (broken_) ::kill(pid_, SIGKILL);
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace manyshot
