#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace manyshot {

struct TokenCount {
  std::uint64_t value = 0;

  auto operator<=>(const TokenCount&) const = default;
  TokenCount operator+(TokenCount other) const { return {value + other.value}; }
  TokenCount& operator+=(TokenCount other) {
    value += other.value;
    return *this;
  }
};

inline constexpr std::string_view kApproximateRule =
    "approximate tokenizer: every maximal run of non-whitespace characters counts "
    "as 1 token, plus ceil(max(0, run_bytes - 16) / 4) extra tokens for runs longer "
    "than 16 UTF-8 bytes; whitespace counts as 0 tokens.";

struct TokenizerSpec {
  enum class Kind { approximate, vocab_file };

  Kind kind = Kind::approximate;
  std::optional<std::filesystem::path> vocab_path;

  static TokenizerSpec approximate() { return {}; }
  static TokenizerSpec vocab_file(std::filesystem::path path) {
    return {Kind::vocab_file, std::move(path)};
  }
  // "approximate" or a path to a merges file.
  static TokenizerSpec parse(std::string_view arg);
};

enum class TokenizerErrc { invalid_spec, missing_vocab_file, malformed_vocab_file };

class TokenizerError : public std::runtime_error {
 public:
  TokenizerError(TokenizerErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  TokenizerErrc code() const noexcept { return code_; }

 private:
  TokenizerErrc code_;
};

// Immutable after construction; `count` may be called concurrently.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual TokenCount count(std::string_view text) const = 0;

  // True when the tokenizer never merges across whitespace, i.e.
  // count(a + w + b) == count(a) + count(w + b) whenever w is a nonempty
  // whitespace run. Packers use it to measure appended shots incrementally.
  virtual bool whitespace_additive() const { return false; }

  // Human-readable identity of the counting rule, recorded in run manifests.
  virtual std::string describe() const = 0;
};

using TokenizerPtr = std::shared_ptr<const Tokenizer>;

TokenizerPtr load_tokenizer(const TokenizerSpec& spec);

inline TokenCount count_tokens(const Tokenizer& tokenizer, std::string_view text) {
  return tokenizer.count(text);
}

}  // namespace manyshot
