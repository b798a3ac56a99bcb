#pragma once

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "manyshot/chat_client.hpp"
#include "manyshot/corpus.hpp"

namespace manyshot {

inline constexpr std::string_view kTranslationTemplate =
    "Translate this {SRC} sentence into {TGT}. You must only reply with the translated "
    "sentence, no other details are required.\n\n{sentence}";

std::string build_translation_prompt(std::string_view sentence, const LanguageTag& source,
                                     const LanguageTag& target);

enum class ValidationErrc { empty_response, multi_paragraph, refusal_detected };

std::string_view to_string(ValidationErrc code);

struct ValidationRejection {
  ValidationErrc code;
  std::string detail;
};

// Trims, strips leading preambles ("Here is the translation:", "Translation:",
// ...) until none remain, and rejects empty, multi-line or refusal responses.
std::variant<std::string, ValidationRejection> validate_translation(std::string_view raw_response);

enum class ReasoningMode { minimal, default_mode };

struct SynthesisJob {
  std::vector<std::string> sentences;  // low-resource language text
  LanguageTag source_lang;
  std::vector<LanguageTag> reference_langs;
  EndpointConfig endpoint;
  ReasoningMode reasoning_mode = ReasoningMode::minimal;
  int max_attempts = 3;
};

struct Provenance {
  std::string model_id;
  std::string timestamp;    // ISO-8601 UTC
  std::string prompt_hash;  // SHA-256 hex over the prompts in reference order
};

struct SynthesizedTriplet {
  std::size_t index = 0;  // position in the job's sentence list
  std::string target_text;
  std::map<std::string, std::string> translations;  // reference code -> text
  Provenance provenance;
};

struct SynthesisFailure {
  std::size_t index = 0;
  std::string sentence;
  std::string reference_lang;
  std::string reason;
  int attempts = 0;
};

struct SynthesisOutput {
  std::vector<SynthesizedTriplet> triplets;  // input order
  std::vector<SynthesisFailure> failures;    // one entry per failed sentence
};

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checks direction (low-resource source, reference-language targets only)
// before any request is issued; throws SynthesisError otherwise.
void validate_job(const SynthesisJob& job, const LanguageTable& languages);

// Throws EndpointUnavailable when every request failed to connect.
SynthesisOutput translate_batch(const SynthesisJob& job, const ChatBackend& backend,
                                const LanguageTable& languages = LanguageTable::defaults());

std::string to_jsonl_line(const SynthesizedTriplet& triplet);
nlohmann::json failures_json(const std::vector<SynthesisFailure>& failures);

std::string sha256_hex(std::string_view data);

}  // namespace manyshot
