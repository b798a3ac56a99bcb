#include "manyshot/tokenizer.hpp"

#include <fstream>
#include <limits>
#include <unordered_map>
#include <vector>

#include "manyshot/unicode.hpp"

namespace manyshot {

namespace {

class ApproximateTokenizer final : public Tokenizer {
 public:
  TokenCount count(std::string_view text) const override {
    std::uint64_t tokens = 0;
    for (std::string_view run : unicode::split_whitespace(text)) {
      tokens += 1;
      if (run.size() > 16) tokens += (run.size() - 16 + 3) / 4;
    }
    return {tokens};
  }

  bool whitespace_additive() const override { return true; }

  std::string describe() const override {
    return "approximate(run_threshold=16,bytes_per_token=4)";
  }
};

// Byte-pair merges applied independently inside every whitespace-delimited
// word, starting from Unicode code points. The lowest-ranked adjacent pair is
// merged at all of its non-overlapping occurrences, left to right, until no
// ranked pair remains. Each LF counts as one token; other whitespace is free.
class MergeTableTokenizer final : public Tokenizer {
 public:
  MergeTableTokenizer(std::filesystem::path source, std::vector<std::pair<std::string, std::string>> merges)
      : source_(std::move(source)), n_merges_(merges.size()) {
    std::uint32_t rank = 0;
    for (auto& [left, right] : merges) {
      const std::uint32_t a = intern(left);
      const std::uint32_t b = intern(right);
      const std::uint32_t merged = intern(left + right);
      // Duplicate rules keep their first (lowest) rank.
      rules_.try_emplace(pair_key(a, b), Rule{rank, merged});
      ++rank;
    }
  }

  TokenCount count(std::string_view text) const override {
    std::uint64_t tokens = 0;
    for (char c : text) {
      if (c == '\n') ++tokens;
    }
    std::vector<std::uint32_t> symbols;
    for (std::string_view word : unicode::split_whitespace(text)) {
      tokens += count_word(word, symbols);
    }
    return {tokens};
  }

  bool whitespace_additive() const override { return true; }

  std::string describe() const override {
    return "bpe(" + source_.string() + ", merges=" + std::to_string(n_merges_) + ")";
  }

 private:
  struct Rule {
    std::uint32_t rank;
    std::uint32_t merged;
  };

  static constexpr std::uint32_t kUnknown = std::numeric_limits<std::uint32_t>::max();

  static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::uint32_t intern(const std::string& symbol) {
    auto [it, inserted] = ids_.try_emplace(symbol, static_cast<std::uint32_t>(ids_.size()));
    return it->second;
  }

  std::uint32_t lookup(const std::string& symbol) const {
    auto it = ids_.find(symbol);
    return it == ids_.end() ? kUnknown : it->second;
  }

  const Rule* rule_for(std::uint32_t a, std::uint32_t b) const {
    if (a == kUnknown || b == kUnknown) return nullptr;
    auto it = rules_.find(pair_key(a, b));
    return it == rules_.end() ? nullptr : &it->second;
  }

  std::uint64_t count_word(std::string_view word, std::vector<std::uint32_t>& symbols) const {
    symbols.clear();
    std::string cp_bytes;
    for (std::size_t i = 0; i < word.size();) {
      std::size_t len = 1;
      unicode::decode_at(word, i, len);
      cp_bytes.assign(word.substr(i, len));
      symbols.push_back(lookup(cp_bytes));
      i += len;
    }
    while (symbols.size() > 1) {
      const Rule* best = nullptr;
      std::uint32_t best_a = 0;
      std::uint32_t best_b = 0;
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        const Rule* r = rule_for(symbols[i], symbols[i + 1]);
        if (r != nullptr && (best == nullptr || r->rank < best->rank)) {
          best = r;
          best_a = symbols[i];
          best_b = symbols[i + 1];
        }
      }
      if (best == nullptr) break;
      std::size_t out = 0;
      for (std::size_t i = 0; i < symbols.size();) {
        if (i + 1 < symbols.size() && symbols[i] == best_a && symbols[i + 1] == best_b) {
          symbols[out++] = best->merged;
          i += 2;
        } else {
          symbols[out++] = symbols[i++];
        }
      }
      symbols.resize(out);
    }
    return symbols.size();
  }

  std::filesystem::path source_;
  std::size_t n_merges_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::unordered_map<std::uint64_t, Rule> rules_;
};

TokenizerPtr load_merge_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TokenizerError(TokenizerErrc::missing_vocab_file,
                         "cannot open vocab file: " + path.string());
  }
  std::vector<std::pair<std::string, std::string>> merges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("#version", 0) == 0) continue;
    if (unicode::trim(line).empty()) continue;
    const auto parts = unicode::split_whitespace(line);
    if (parts.size() != 2) {
      throw TokenizerError(TokenizerErrc::malformed_vocab_file,
                           path.string() + ":" + std::to_string(line_no) +
                               ": expected two space-separated symbols");
    }
    merges.emplace_back(std::string(parts[0]), std::string(parts[1]));
  }
  if (merges.empty()) {
    throw TokenizerError(TokenizerErrc::malformed_vocab_file,
                         path.string() + ": no merge rules");
  }
  return std::make_shared<MergeTableTokenizer>(path, std::move(merges));
}

}  // namespace

TokenizerSpec TokenizerSpec::parse(std::string_view arg) {
  if (arg.empty() || arg == "approximate") return approximate();
  return vocab_file(std::filesystem::path(std::string(arg)));
}

TokenizerPtr load_tokenizer(const TokenizerSpec& spec) {
  switch (spec.kind) {
    case TokenizerSpec::Kind::approximate:
      if (spec.vocab_path) {
        throw TokenizerError(TokenizerErrc::invalid_spec,
                             "approximate tokenizer takes no vocab path");
      }
      return std::make_shared<ApproximateTokenizer>();
    case TokenizerSpec::Kind::vocab_file:
      if (!spec.vocab_path || spec.vocab_path->empty()) {
        throw TokenizerError(TokenizerErrc::missing_vocab_file,
                             "vocab_file tokenizer requires a vocab path");
      }
      return load_merge_table(*spec.vocab_path);
  }
  throw TokenizerError(TokenizerErrc::invalid_spec, "unknown tokenizer kind");
}

}  // namespace manyshot
