#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "manyshot/corpus.hpp"
#include "manyshot/records.hpp"
#include "manyshot/tokenizer.hpp"

namespace manyshot {

inline constexpr std::string_view kDefaultPreamble =
    "You are a helpful translation assistant. Your current task is to translate texts as "
    "accurately as possible.";
inline constexpr std::string_view kQwenPrefix = "You are Qwen, created by Alibaba Cloud.";
inline constexpr std::string_view kQueryTemplate =
    "Translate the following sentence from {SRC} to {TGT}.\n{SRC} sentence:\n{sentence}";
inline constexpr std::string_view kShotSeparator = "\n\n";

struct PromptTemplate {
  std::string preamble{kDefaultPreamble};
  std::optional<std::string> model_prefix;
  std::string query_block{kQueryTemplate};

  // "default" or "qwen-prefix".
  static PromptTemplate named(std::string_view name);
  void validate() const;
  std::string system_text() const;
  std::string query(std::string_view source_label, std::string_view target_label,
                    std::string_view sentence) const;
};

struct BudgetLadder {
  std::vector<TokenCount> rungs;

  // {0} followed by 2^first .. 2^last.
  static BudgetLadder powers_of_two(int first = 7, int last = 20, bool with_zero_shot = true);
  // "7..20" (exponents) or a comma list of token counts such as "0,128,256".
  static BudgetLadder parse(std::string_view text, bool with_zero_shot = true);
  void validate() const;
};

struct PackedContext {
  std::string shots_text;
  std::size_t n_shots = 0;
  TokenCount shot_tokens;
  SelectionMode selection_mode = SelectionMode::first_k;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> shot_indices;  // indices into the formatted shot list
};

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// monolingual: the text itself; instruction: instruction, input (if any) and
// output on consecutive lines; parallel: "{RefLabel}: ref\n{TgtLabel}: tgt".
// Throws PromptError when the record does not match `schema`.
std::string format_shot(const CorpusRecord& record, CorpusSchema schema);
std::vector<std::string> format_shots(const std::vector<CorpusRecord>& records, CorpusSchema schema);

// Appends whole shots, joined by a blank line, while the measured token count
// of the joined text stays within `rung`; stops at the first shot that would
// exceed it.
PackedContext pack_first_k(std::span<const std::string> shots, TokenCount rung,
                           const Tokenizer& tokenizer);
// Same rule applied to a seeded uniform permutation of the shots.
PackedContext pack_random_k(std::span<const std::string> shots, TokenCount rung,
                            const Tokenizer& tokenizer, std::uint64_t seed);

struct AssembledPrompt {
  std::string system_text;
  std::string user_text;
};

AssembledPrompt assemble_prompt(const PackedContext& packed, const EvalExample& example,
                                const PromptTemplate& tmpl);
// The prompt as one block: system text, blank line, user text.
std::string render_single_block(const AssembledPrompt& prompt);

}  // namespace manyshot
