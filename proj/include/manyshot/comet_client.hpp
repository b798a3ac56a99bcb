#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <sys/types.h>
#include <vector>

namespace manyshot {

inline constexpr int kCometProtocol = 1;

struct CometRequest {
  long long id = 0;
  std::string src;
  std::string mt;
  std::string ref;
};

struct CometResponse {
  long long id = 0;
  std::optional<double> score;
  std::optional<std::string> error;
};

enum class CometErrc { spawn_failed, handshake_failed, sidecar_crashed, protocol_violation };

class CometError : public std::runtime_error {
 public:
  CometError(CometErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CometErrc code() const noexcept { return code_; }

 private:
  CometErrc code_;
};

// Client for the scoring sidecar: one JSON object per line over the child's
// stdin/stdout. The child first writes {"protocol": 1, "model": ...}; a
// handshake carrying "error" instead means the model failed to load.
class CometSidecar {
 public:
  explicit CometSidecar(std::vector<std::string> argv);
  ~CometSidecar();
  CometSidecar(const CometSidecar&) = delete;
  CometSidecar& operator=(const CometSidecar&) = delete;

  const std::string& model() const { return model_; }
  pid_t pid() const { return pid_; }

  // Responses in request order. Throws SidecarCrashed if the child exits
  // before answering every id and ProtocolViolation on a malformed or
  // out-of-order line; no partial results are returned in either case.
  std::vector<CometResponse> score_batch(const std::vector<CometRequest>& requests);

  // Closes the child's stdin and reaps it; returns its exit status.
  int close();

 private:
  std::optional<std::string> read_line();

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::string model_;
  bool broken_ = false;
};

}  // namespace manyshot
