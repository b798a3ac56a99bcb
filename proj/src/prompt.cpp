#include "manyshot/prompt.hpp"

#include <charconv>
#include <numeric>

#include "manyshot/shuffle.hpp"
#include "manyshot/unicode.hpp"

namespace manyshot {

PromptTemplate PromptTemplate::named(std::string_view name) {
  PromptTemplate t;
  if (name == "default") return t;
  if (name == "qwen-prefix") {
    t.model_prefix = std::string(kQwenPrefix);
    return t;
  }
  throw std::invalid_argument("unknown prompt template: " + std::string(name));
}

void PromptTemplate::validate() const {
  if (preamble.empty()) throw std::invalid_argument("prompt preamble must be nonempty");
  for (std::string_view ph : {"{SRC}", "{TGT}", "{sentence}"}) {
    if (query_block.find(ph) == std::string::npos) {
      throw std::invalid_argument("query block lacks placeholder " + std::string(ph));
    }
  }
}

std::string PromptTemplate::system_text() const {
  if (model_prefix && !model_prefix->empty()) return *model_prefix + " " + preamble;
  return preamble;
}

std::string PromptTemplate::query(std::string_view source_label, std::string_view target_label,
                                  std::string_view sentence) const {
  std::string out;
  out.reserve(query_block.size() + sentence.size() + 32);
  std::size_t i = 0;
  while (i < query_block.size()) {
    if (query_block[i] == '{') {
      const std::string_view rest = std::string_view(query_block).substr(i);
      if (rest.starts_with("{SRC}")) {
        out += source_label;
        i += 5;
        continue;
      }
      if (rest.starts_with("{TGT}")) {
        out += target_label;
        i += 5;
        continue;
      }
      if (rest.starts_with("{sentence}")) {
        out += sentence;
        i += 10;
        continue;
      }
    }
    out.push_back(query_block[i++]);
  }
  return out;
}

BudgetLadder BudgetLadder::powers_of_two(int first, int last, bool with_zero_shot) {
  if (first < 0 || last < first || last > 40) throw std::invalid_argument("bad ladder exponents");
  BudgetLadder ladder;
  if (with_zero_shot) ladder.rungs.push_back({0});
  for (int n = first; n <= last; ++n) ladder.rungs.push_back({std::uint64_t{1} << n});
  return ladder;
}

namespace {

std::uint64_t parse_uint(std::string_view s) {
  s = unicode::trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a non-negative integer: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

BudgetLadder BudgetLadder::parse(std::string_view text, bool with_zero_shot) {
  const auto dots = text.find("..");
  if (dots != std::string_view::npos) {
    return powers_of_two(static_cast<int>(parse_uint(text.substr(0, dots))),
                         static_cast<int>(parse_uint(text.substr(dots + 2))), with_zero_shot);
  }
  BudgetLadder ladder;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    ladder.rungs.push_back({parse_uint(piece)});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (with_zero_shot && (ladder.rungs.empty() || ladder.rungs.front().value != 0)) {
    ladder.rungs.insert(ladder.rungs.begin(), TokenCount{0});
  }
  ladder.validate();
  return ladder;
}

void BudgetLadder::validate() const {
  for (std::size_t i = 1; i < rungs.size(); ++i) {
    if (!(rungs[i - 1] < rungs[i])) throw std::invalid_argument("ladder rungs must increase");
  }
}

std::string format_shot(const CorpusRecord& record, CorpusSchema schema) {
  switch (schema) {
    case CorpusSchema::monolingual:
      if (const auto* r = std::get_if<MonolingualRecord>(&record)) return r->text;
      break;
    case CorpusSchema::instruction:
      if (const auto* r = std::get_if<InstructionRecord>(&record)) {
        std::string out = r->instruction;
        if (!r->input.empty()) {
          out.push_back('\n');
          out += r->input;
        }
        out.push_back('\n');
        out += r->output;
        return out;
      }
      break;
    case CorpusSchema::parallel:
      if (const auto* r = std::get_if<ParallelRecord>(&record)) {
        return r->reference_lang.label + ": " + r->reference_text + "\n" + r->target_lang.label +
               ": " + r->target_text;
      }
      break;
  }
  throw PromptError("record does not match corpus type " + std::string(to_string(schema)));
}

std::vector<std::string> format_shots(const std::vector<CorpusRecord>& records,
                                      CorpusSchema schema) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(format_shot(r, schema));
  return out;
}

namespace {

PackedContext pack_in_order(std::span<const std::string> shots, std::span<const std::size_t> order,
                            TokenCount rung, const Tokenizer& tokenizer) {
  PackedContext packed;
  if (rung.value == 0) return packed;
  const bool incremental = tokenizer.whitespace_additive();
  std::string joined;
  for (std::size_t idx : order) {
    const std::string& shot = shots[idx];
    TokenCount measured;
    if (packed.n_shots == 0) {
      measured = tokenizer.count(shot);
    } else if (incremental) {
      std::string appended;
      appended.reserve(kShotSeparator.size() + shot.size());
      appended += kShotSeparator;
      appended += shot;
      measured = packed.shot_tokens + tokenizer.count(appended);
    } else {
      std::string trial = packed.shots_text;
      trial += kShotSeparator;
      trial += shot;
      measured = tokenizer.count(trial);
    }
    if (measured > rung) break;
    if (packed.n_shots > 0) packed.shots_text += kShotSeparator;
    packed.shots_text += shot;
    packed.shot_tokens = measured;
    packed.shot_indices.push_back(idx);
    ++packed.n_shots;
  }
  return packed;
}

}  // namespace

PackedContext pack_first_k(std::span<const std::string> shots, TokenCount rung,
                           const Tokenizer& tokenizer) {
  std::vector<std::size_t> order(shots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  PackedContext packed = pack_in_order(shots, order, rung, tokenizer);
  packed.selection_mode = SelectionMode::first_k;
  return packed;
}

PackedContext pack_random_k(std::span<const std::string> shots, TokenCount rung,
                            const Tokenizer& tokenizer, std::uint64_t seed) {
  const auto order = seeded_permutation(shots.size(), seed);
  PackedContext packed = pack_in_order(shots, order, rung, tokenizer);
  packed.selection_mode = SelectionMode::random_k;
  packed.seed = seed;
  return packed;
}

AssembledPrompt assemble_prompt(const PackedContext& packed, const EvalExample& example,
                                const PromptTemplate& tmpl) {
  AssembledPrompt prompt;
  prompt.system_text = tmpl.system_text();
  if (packed.n_shots > 0) {
    prompt.user_text = packed.shots_text;
    prompt.user_text += kShotSeparator;
  }
  prompt.user_text +=
      tmpl.query(example.source_lang.label, example.target_lang.label, example.source_text);
  return prompt;
}

std::string render_single_block(const AssembledPrompt& prompt) {
  return prompt.system_text + std::string(kShotSeparator) + prompt.user_text;
}

}  // namespace manyshot
