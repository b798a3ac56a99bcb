#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "manyshot/tokenizer.hpp"

namespace manyshot {

enum class StartClass { uppercase_letter, opening_quote, lowercase_letter, digit };

struct FilterConfig {
  int min_words = 5;
  int max_words = 60;
  double max_digit_ratio = 0.15;    // digits / non-space chars
  double max_punct_ratio = 0.20;    // punctuation+symbols / non-space chars
  double max_upper_ratio = 0.30;    // uppercase / letters
  double max_nonlatin_ratio = 0.10; // non-Latin letters / letters
  bool require_terminal_punct = true;
  std::vector<StartClass> valid_start_classes{StartClass::uppercase_letter,
                                              StartClass::opening_quote};

  // Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

// Declaration order is the order the checks run in.
enum class RejectionCode {
  too_short,
  too_long,
  web_artifact,
  code_like,
  nonlatin_excess,
  digit_ratio,
  punct_ratio,
  upper_ratio,
  bad_start,
  no_terminal_punct,
};

std::string_view to_string(RejectionCode code);

struct RejectionReason {
  RejectionCode code;
  std::string detail;
};

using RejectionHistogram = std::map<std::string, std::size_t>;

struct FilterResult {
  std::vector<std::string> kept;
  RejectionHistogram rejections;
};

std::vector<std::string> segment_sentences(std::string_view text);

// nullopt means the sentence is accepted.
std::optional<RejectionReason> passes_filter(std::string_view sentence, const FilterConfig& cfg);

FilterResult filter_corpus(const std::vector<std::string>& sentences, const FilterConfig& cfg);

// Lowercase, punctuation and symbols dropped, whitespace collapsed and trimmed.
std::string normalize_for_dedup(std::string_view text);

// Containment index over normalized sentences: exact-match hash set plus a
// word-keyed candidate index for the substring cases.
class ContainmentIndex {
 public:
  void insert(std::string normalized);
  // True iff `normalized` is a substring of an indexed sentence or vice versa.
  bool contains_related(std::string_view normalized) const;
  std::size_t size() const { return texts_.size(); }

 private:
  bool inside_indexed(std::string_view normalized, const std::vector<std::string_view>& words) const;
  bool contains_indexed(std::string_view normalized,
                        const std::vector<std::string_view>& words) const;

  std::vector<std::string> texts_;
  std::unordered_set<std::string> exact_;
  // Complete interior word -> texts containing it as a whole word.
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_word_;
  // Each text with >= 3 words is filed under its longest interior word.
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_key_word_;
  std::vector<std::uint32_t> short_texts_;
};

bool is_near_duplicate(std::string_view candidate, const ContainmentIndex& selected);

struct SamplerConfig {
  TokenCount token_budget{500'000};
  double min_avg_word_len = 3.0;
  // 0 keeps the input order; other values apply a seeded permutation first.
  std::uint64_t seed = 0;
};

struct VocabularyState {
  std::unordered_map<std::string, std::uint64_t> counts;
  TokenCount total_tokens;
};

struct SampleResult {
  std::vector<std::string> selected;
  std::vector<std::size_t> selected_indices;  // positions in the input list
  VocabularyState vocabulary;
};

class EmptyPoolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Words scored by the sampler: whitespace tokens of the normalized sentence.
std::vector<std::string> sampler_words(std::string_view sentence);

SampleResult sample_diverse(const std::vector<std::string>& sentences, const SamplerConfig& cfg,
                            const Tokenizer& tokenizer);

}  // namespace manyshot
