#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "manyshot/chat_client.hpp"
#include "manyshot/corpus.hpp"
#include "manyshot/prompt.hpp"
#include "manyshot/records.hpp"
#include "manyshot/tokenizer.hpp"

namespace manyshot {

struct CorpusSource {
  CorpusType type;
  std::filesystem::path path;
};

struct DirectionSource {
  std::string source_lang;  // codes
  std::string target_lang;
  std::filesystem::path source_file;
  std::filesystem::path target_file;
};

struct ExperimentConfig {
  EndpointConfig endpoint;
  DecodingConfig decoding;
  TokenizerSpec tokenizer = TokenizerSpec::approximate();
  BudgetLadder ladder = BudgetLadder::powers_of_two();
  SelectionMode mode = SelectionMode::first_k;
  int runs = 5;
  std::map<std::uint64_t, int> runs_per_rung;  // rung -> run count override
  std::uint64_t seed = 0;
  PromptTemplate prompt_template;
  std::vector<CorpusSource> corpora;
  std::vector<DirectionSource> directions;
  std::optional<std::size_t> max_examples;
  LanguageTable languages = LanguageTable::defaults();

  void validate() const;
  int runs_for(TokenCount rung) const;
};

// Relative paths resolve against the config file's directory.
ExperimentConfig load_experiment(const std::filesystem::path& path);
ExperimentConfig parse_experiment(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});

struct PromptItem {
  AssembledPrompt prompt;
  std::size_t example_index = 0;
  std::string example_id;
  std::string source_text;
  std::string reference_text;
};

struct ItemFailure {
  std::size_t example_index = 0;
  std::string error;
};

struct ConditionOutcome {
  std::vector<GenerationResult> results;  // example order
  std::vector<ItemFailure> failures;
};

// Seed sent with each request; a pure function of the condition and example.
std::uint64_t request_seed(const Condition& condition, std::size_t example_index);

// Issues the first request alone so the endpoint can cache the shared shots
// prefix, then the rest with bounded parallelism. Throws EndpointUnavailable
// when no request could connect.
ConditionOutcome run_condition(const std::vector<PromptItem>& items, const Condition& condition,
                               const PackedContext& packed, const DecodingConfig& decoding,
                               const EndpointConfig& endpoint, const ChatBackend& backend,
                               const Tokenizer& tokenizer);

struct ConditionEntry {
  Condition condition;
  std::string status;  // "complete" or "failed"
  std::size_t n_results = 0;
  std::vector<ItemFailure> failures;
  std::size_t n_shots = 0;
  TokenCount shot_tokens;
  std::optional<std::uint64_t> seed;
};

struct RunStore {
  nlohmann::json header;  // manifest fields other than the condition table
  std::vector<ConditionEntry> conditions;
  std::vector<GenerationResult> results;
};

inline constexpr const char* kResultsFile = "results.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

// Loads results.jsonl and manifest.json, keeping only rows of conditions the
// manifest lists. A missing directory or manifest gives an empty store.
RunStore load_store(const std::filesystem::path& dir);

struct SweepStats {
  std::size_t conditions_run = 0;
  std::size_t conditions_skipped = 0;
  std::size_t results_written = 0;
  std::size_t failures = 0;
  std::vector<std::string> warnings;
};

// Iterates corpus type x direction x rung x run. Zero-shot runs once per
// direction with run_id 0. Completed conditions in an existing manifest are
// skipped; rows of unfinished ones are dropped before resuming.
SweepStats run_sweep(const ExperimentConfig& experiment, const ChatBackend& backend,
                     const std::filesystem::path& out_dir);
SweepStats run_sweep(const ExperimentConfig& experiment, const std::filesystem::path& out_dir);

}  // namespace manyshot
