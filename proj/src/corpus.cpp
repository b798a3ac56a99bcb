#include "manyshot/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

#include "manyshot/unicode.hpp"

namespace manyshot {

using nlohmann::json;

LanguageTable LanguageTable::defaults() {
  LanguageTable table;
  table.add({{"eng_Latn", "English"}, "EN", true});
  table.add({{"ind_Latn", "Indonesian"}, "ID", true});
  table.add({{"jav_Latn", "Javanese"}, "JV", false});
  table.add({{"sun_Latn", "Sundanese"}, "SU", false});
  return table;
}

void LanguageTable::add(Entry entry) {
  if (entry.tag.code.empty() || entry.tag.label.empty()) {
    throw std::invalid_argument("language code and label must be nonempty");
  }
  if (entry.abbrev.empty()) {
    entry.abbrev = entry.tag.code.substr(0, std::min<std::size_t>(2, entry.tag.code.size()));
    std::transform(entry.abbrev.begin(), entry.abbrev.end(), entry.abbrev.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  }
  for (auto& existing : entries_) {
    const bool same_code = existing.tag.code == entry.tag.code;
    const bool same_label = existing.tag.label == entry.tag.label;
    if (same_code && same_label) {
      existing = std::move(entry);
      return;
    }
    if (same_code || same_label) {
      throw std::invalid_argument("language table must stay bijective: " + entry.tag.code +
                                  " / " + entry.tag.label);
    }
  }
  entries_.push_back(std::move(entry));
}

const LanguageTable::Entry& LanguageTable::entry(std::string_view code) const {
  for (const auto& e : entries_) {
    if (e.tag.code == code) return e;
  }
  throw CorpusError(CorpusErrc::unknown_language, "unknown language code: " + std::string(code));
}

const LanguageTag& LanguageTable::by_label(std::string_view label) const {
  for (const auto& e : entries_) {
    if (e.tag.label == label) return e.tag;
  }
  throw CorpusError(CorpusErrc::unknown_language, "unknown language label: " + std::string(label));
}

bool LanguageTable::contains(std::string_view code) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.tag.code == code; });
}

std::string_view to_string(CorpusSchema schema) {
  switch (schema) {
    case CorpusSchema::monolingual: return "monolingual";
    case CorpusSchema::instruction: return "instruction";
    case CorpusSchema::parallel: return "parallel";
  }
  return "?";
}

CorpusSchema parse_schema(std::string_view name) {
  if (name == "monolingual") return CorpusSchema::monolingual;
  if (name == "instruction" || name == "instructions") return CorpusSchema::instruction;
  if (name == "parallel") return CorpusSchema::parallel;
  throw std::invalid_argument("unknown corpus schema: " + std::string(name));
}

namespace {

[[noreturn]] void violation(std::size_t line_no, const std::string& reason) {
  throw CorpusError(CorpusErrc::schema_violation,
                    "line " + std::to_string(line_no) + ": " + reason, line_no);
}

std::string required_text(const json& obj, const char* field, std::size_t line_no,
                          bool allow_empty = false) {
  auto it = obj.find(field);
  if (it == obj.end()) violation(line_no, std::string("missing field '") + field + "'");
  if (!it->is_string()) violation(line_no, std::string("field '") + field + "' is not a string");
  std::string value = it->get<std::string>();
  if (!allow_empty && unicode::trim(value).empty()) {
    violation(line_no, std::string("field '") + field + "' is empty");
  }
  return value;
}

}  // namespace

CorpusRecord parse_jsonl_line(std::string_view line, CorpusSchema schema,
                              const LanguageTable& languages, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    violation(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) violation(line_no, "record is not a JSON object");

  switch (schema) {
    case CorpusSchema::monolingual:
      return MonolingualRecord{required_text(obj, "text", line_no)};
    case CorpusSchema::instruction: {
      InstructionRecord rec;
      rec.instruction = required_text(obj, "instruction", line_no);
      if (obj.contains("input")) rec.input = required_text(obj, "input", line_no, true);
      rec.output = required_text(obj, "output", line_no);
      return rec;
    }
    case CorpusSchema::parallel: {
      const std::string ref_code = required_text(obj, "ref_lang", line_no);
      const std::string tgt_code = required_text(obj, "tgt_lang", line_no);
      if (!languages.contains(ref_code)) violation(line_no, "unknown ref_lang " + ref_code);
      if (!languages.contains(tgt_code)) violation(line_no, "unknown tgt_lang " + tgt_code);
      if (ref_code == tgt_code) violation(line_no, "ref_lang equals tgt_lang");
      ParallelRecord rec;
      rec.reference_lang = languages.resolve(ref_code);
      rec.target_lang = languages.resolve(tgt_code);
      rec.reference_text = required_text(obj, "ref_text", line_no);
      rec.target_text = required_text(obj, "tgt_text", line_no);
      return rec;
    }
  }
  violation(line_no, "unknown schema");
}

std::string to_jsonl_line(const CorpusRecord& record) {
  json obj = std::visit(
      [](const auto& rec) -> json {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, MonolingualRecord>) {
          return {{"text", rec.text}};
        } else if constexpr (std::is_same_v<T, InstructionRecord>) {
          return {{"instruction", rec.instruction}, {"input", rec.input}, {"output", rec.output}};
        } else {
          return {{"ref_lang", rec.reference_lang.code},
                  {"tgt_lang", rec.target_lang.code},
                  {"ref_text", rec.reference_text},
                  {"tgt_text", rec.target_text}};
        }
      },
      record);
  return obj.dump();
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path, CorpusSchema schema,
                                      const LanguageTable& languages) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusErrc::file_unreadable, "cannot read " + path.string());
  std::vector<CorpusRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) violation(line_no, "empty line");
    records.push_back(parse_jsonl_line(line, schema, languages, line_no));
  }
  if (in.bad()) throw CorpusError(CorpusErrc::file_unreadable, "read error on " + path.string());
  return records;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError(CorpusErrc::file_unreadable, "cannot write " + path.string());
  for (const auto& rec : records) out << to_jsonl_line(rec) << '\n';
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusErrc::file_unreadable, "cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError(CorpusErrc::file_unreadable, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

std::vector<EvalExample> align_eval_set(const std::filesystem::path& source_file,
                                        const std::filesystem::path& target_file,
                                        const LanguageTag& source_lang,
                                        const LanguageTag& target_lang) {
  if (source_lang.code == target_lang.code) {
    throw std::invalid_argument("eval source and target languages must differ");
  }
  const auto src = read_lines(source_file);
  const auto tgt = read_lines(target_file);
  if (src.size() != tgt.size()) {
    throw CorpusError(CorpusErrc::line_count_mismatch,
                      "line count mismatch: " + std::to_string(src.size()) + " vs " +
                          std::to_string(tgt.size()));
  }
  std::vector<EvalExample> examples;
  examples.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (unicode::trim(src[i]).empty() || unicode::trim(tgt[i]).empty()) {
      violation(i + 1, "empty eval segment");
    }
    examples.push_back({source_lang, target_lang, src[i], tgt[i]});
  }
  return examples;
}

std::vector<EvalExample> reverse_direction(const std::vector<EvalExample>& examples) {
  std::vector<EvalExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back({ex.target_lang, ex.source_lang, ex.reference_text, ex.source_text});
  }
  return out;
}

}  // namespace manyshot
