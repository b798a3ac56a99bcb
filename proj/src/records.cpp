#include "manyshot/records.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace manyshot {

using nlohmann::json;

std::string_view to_string(CorpusType type) {
  switch (type) {
    case CorpusType::unsupervised: return "unsupervised";
    case CorpusType::instructions: return "instructions";
    case CorpusType::supervised_en: return "supervised_en";
    case CorpusType::supervised_id: return "supervised_id";
  }
  return "?";
}

CorpusType parse_corpus_type(std::string_view name) {
  if (name == "unsupervised") return CorpusType::unsupervised;
  if (name == "instructions") return CorpusType::instructions;
  if (name == "supervised_en") return CorpusType::supervised_en;
  if (name == "supervised_id") return CorpusType::supervised_id;
  throw std::invalid_argument("unknown corpus type: " + std::string(name));
}

CorpusSchema schema_of(CorpusType type) {
  switch (type) {
    case CorpusType::unsupervised: return CorpusSchema::monolingual;
    case CorpusType::instructions: return CorpusSchema::instruction;
    case CorpusType::supervised_en:
    case CorpusType::supervised_id: return CorpusSchema::parallel;
  }
  return CorpusSchema::monolingual;
}

std::string_view to_string(SelectionMode mode) {
  return mode == SelectionMode::first_k ? "first_k" : "random_k";
}

SelectionMode parse_selection_mode(std::string_view name) {
  if (name == "first_k") return SelectionMode::first_k;
  if (name == "random_k") return SelectionMode::random_k;
  throw std::invalid_argument("unknown selection mode: " + std::string(name));
}

std::string Condition::key() const {
  return corpus_label() + "|" + source_lang + ">" + target_lang + "|" +
         std::to_string(rung.value) + "|" + std::to_string(run_id);
}

std::string to_json_line(const GenerationResult& r) {
  json j = {
      {"corpus_type", r.condition.corpus_label()},
      {"src_lang", r.condition.source_lang},
      {"tgt_lang", r.condition.target_lang},
      {"rung", r.condition.rung.value},
      {"run_id", r.condition.run_id},
      {"example_index", r.example_index},
      {"example_id", r.example_id},
      {"model_id", r.model_id},
      {"source_text", r.source_text},
      {"reference_text", r.reference_text},
      {"output_text", r.output_text},
      {"prompt_tokens", r.prompt_tokens.value},
      {"output_tokens", r.output_tokens.value},
      {"output_tokens_source", r.output_tokens_source},
      {"shot_tokens", r.shot_tokens.value},
      {"n_shots", r.n_shots},
      {"truncated", r.truncated},
      {"latency_ms", r.latency_ms},
  };
  return j.dump();
}

GenerationResult generation_result_from_json(std::string_view line) {
  const json j = json::parse(line);
  GenerationResult r;
  const auto label = j.at("corpus_type").get<std::string>();
  if (label != kZeroShotLabel) r.condition.corpus_type = parse_corpus_type(label);
  r.condition.source_lang = j.at("src_lang").get<std::string>();
  r.condition.target_lang = j.at("tgt_lang").get<std::string>();
  r.condition.rung = {j.at("rung").get<std::uint64_t>()};
  r.condition.run_id = j.at("run_id").get<int>();
  r.example_index = j.at("example_index").get<std::size_t>();
  r.example_id = j.at("example_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.source_text = j.at("source_text").get<std::string>();
  r.reference_text = j.at("reference_text").get<std::string>();
  r.output_text = j.at("output_text").get<std::string>();
  r.prompt_tokens = {j.at("prompt_tokens").get<std::uint64_t>()};
  r.output_tokens = {j.at("output_tokens").get<std::uint64_t>()};
  r.output_tokens_source = j.value("output_tokens_source", std::string("usage"));
  r.shot_tokens = {j.value("shot_tokens", std::uint64_t{0})};
  r.n_shots = j.value("n_shots", std::size_t{0});
  r.truncated = j.value("truncated", false);
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  return r;
}

}  // namespace manyshot
