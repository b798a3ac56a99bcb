#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "manyshot/corpus.hpp"
#include "manyshot/tokenizer.hpp"

namespace manyshot {

enum class CorpusType { unsupervised, instructions, supervised_en, supervised_id };

std::string_view to_string(CorpusType type);
CorpusType parse_corpus_type(std::string_view name);
// unsupervised -> monolingual, instructions -> instruction, supervised_* -> parallel.
CorpusSchema schema_of(CorpusType type);

enum class SelectionMode { first_k, random_k };

std::string_view to_string(SelectionMode mode);
SelectionMode parse_selection_mode(std::string_view name);

// Label used where a zero-shot condition needs a corpus-type slot.
inline constexpr std::string_view kZeroShotLabel = "zero_shot";

// One cell of a sweep. Zero-shot conditions carry no corpus type: they are
// evaluated once per direction and shared by every corpus type.
struct Condition {
  std::optional<CorpusType> corpus_type;
  std::string source_lang;  // language codes
  std::string target_lang;
  TokenCount rung;
  int run_id = 0;

  std::string corpus_label() const {
    return corpus_type ? std::string(to_string(*corpus_type)) : std::string(kZeroShotLabel);
  }
  // Stable identifier, e.g. "supervised_en|eng_Latn>jav_Latn|128|3".
  std::string key() const;
  bool operator==(const Condition&) const = default;
};

struct GenerationResult {
  Condition condition;
  std::size_t example_index = 0;
  std::string example_id;
  std::string model_id;
  std::string source_text;
  std::string reference_text;
  std::string output_text;
  TokenCount prompt_tokens;
  TokenCount output_tokens;
  std::string output_tokens_source;  // "usage" or "tokenizer"
  TokenCount shot_tokens;
  std::size_t n_shots = 0;
  bool truncated = false;
  std::int64_t latency_ms = 0;
};

std::string to_json_line(const GenerationResult& result);
GenerationResult generation_result_from_json(std::string_view line);

}  // namespace manyshot
