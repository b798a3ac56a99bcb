#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace manyshot {

struct LanguageTag {
  std::string code;   // e.g. "jav_Latn"
  std::string label;  // e.g. "Javanese"

  bool operator==(const LanguageTag&) const = default;
};

// Code <-> label table. Reference languages (English, Indonesian by default)
// are the high-resource side; synthetic translation only ever targets them.
class LanguageTable {
 public:
  struct Entry {
    LanguageTag tag;
    std::string abbrev;  // "JV" in direction labels such as JV→EN
    bool reference = false;
  };

  // eng_Latn, ind_Latn, jav_Latn, sun_Latn.
  static LanguageTable defaults();

  // Rejects an entry whose code or label is already bound to something else.
  void add(Entry entry);
  const Entry& entry(std::string_view code) const;
  const LanguageTag& resolve(std::string_view code) const { return entry(code).tag; }
  const LanguageTag& by_label(std::string_view label) const;
  bool contains(std::string_view code) const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

struct MonolingualRecord {
  std::string text;
};

struct InstructionRecord {
  std::string instruction;
  std::string input;  // may be empty
  std::string output;
};

struct ParallelRecord {
  LanguageTag reference_lang;
  LanguageTag target_lang;
  std::string reference_text;
  std::string target_text;
};

struct EvalExample {
  LanguageTag source_lang;
  LanguageTag target_lang;
  std::string source_text;
  std::string reference_text;
};

enum class CorpusSchema { monolingual, instruction, parallel };

std::string_view to_string(CorpusSchema schema);
CorpusSchema parse_schema(std::string_view name);

using CorpusRecord = std::variant<MonolingualRecord, InstructionRecord, ParallelRecord>;

enum class CorpusErrc { file_unreadable, schema_violation, line_count_mismatch, unknown_language };

class CorpusError : public std::runtime_error {
 public:
  CorpusError(CorpusErrc code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), code_(code), line_(line) {}
  CorpusErrc code() const noexcept { return code_; }
  // 1-based line number for schema violations, 0 otherwise.
  std::size_t line() const noexcept { return line_; }

 private:
  CorpusErrc code_;
  std::size_t line_;
};

// Records in file order. Parallel language codes resolve through `languages`.
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path, CorpusSchema schema,
                                      const LanguageTable& languages = LanguageTable::defaults());
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);

std::string to_jsonl_line(const CorpusRecord& record);
CorpusRecord parse_jsonl_line(std::string_view line, CorpusSchema schema,
                              const LanguageTable& languages, std::size_t line_no = 0);

// One segment per line, LF endings; a trailing newline does not add a line.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

std::vector<EvalExample> align_eval_set(const std::filesystem::path& source_file,
                                        const std::filesystem::path& target_file,
                                        const LanguageTag& source_lang,
                                        const LanguageTag& target_lang);

// Swaps source and reference sides of every example.
std::vector<EvalExample> reverse_direction(const std::vector<EvalExample>& examples);

}  // namespace manyshot
