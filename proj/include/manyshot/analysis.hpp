#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "manyshot/corpus.hpp"
#include "manyshot/metrics.hpp"
#include "manyshot/records.hpp"

namespace manyshot {

inline constexpr const char* kChrfMetric = "chrf_pp";
inline constexpr const char* kCometMetric = "comet";

// One condition (one run of one rung) of one model.
struct RunRecord {
  std::string model_id;
  Condition condition;
  std::map<std::string, double> scores;  // metric name -> score
  double mean_output_tokens = 0.0;
  std::size_t n_examples = 0;
};

// Groups results by (model, condition) and scores each group with ChrF++
// under cfg.aggregation. Output order: by model, then condition key.
std::vector<RunRecord> build_run_records(const std::vector<GenerationResult>& results,
                                         const MetricConfig& cfg = {});

// Averages per-result scores (aligned with `results`) into each matching
// record under `metric`.
void attach_segment_metric(std::vector<RunRecord>& records,
                           const std::vector<GenerationResult>& results,
                           const std::vector<double>& scores, const std::string& metric);

struct GroupKey {
  std::string model_id;
  std::string corpus_label;  // corpus type or kZeroShotLabel
  std::string source_lang;
  std::string target_lang;
  auto operator<=>(const GroupKey&) const = default;
};

struct ConditionMean {
  GroupKey group;
  TokenCount rung;
  double mean = 0.0;
  double stddev = 0.0;  // sample deviation over runs, 0 for a single run
  std::size_t n_runs = 0;
};

// Mean per (model, corpus label, direction, rung) over run ids. Records
// without `metric` are ignored.
std::vector<ConditionMean> aggregate_runs(const std::vector<RunRecord>& records,
                                          const std::string& metric = kChrfMetric);

// Copies each zero-shot mean into every corpus type seen for the same model
// and direction, as the rung-0 point of that curve.
std::vector<ConditionMean> replicate_zero_shot(const std::vector<ConditionMean>& means);

enum class AnalysisErrc { missing_zero_shot, no_shot_rungs, no_matched_conditions };

class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(AnalysisErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  AnalysisErrc code() const noexcept { return code_; }

 private:
  AnalysisErrc code_;
};

struct SummaryRow {
  double zero_shot = 0.0;
  double best = 0.0;
  TokenCount best_at;
  double delta = 0.0;
  double delta_pct = 0.0;
};

// `rung_means` holds (rung, mean) for one (model, corpus type, direction)
// including rung 0. Best excludes rung 0; ties go to the smaller rung.
SummaryRow summarize(const std::vector<std::pair<TokenCount, double>>& rung_means);

struct SummaryEntry {
  GroupKey group;  // corpus_label is a corpus type
  SummaryRow row;
};

// One row per (model, corpus type, direction), each against the zero-shot
// mean of its model and direction.
std::vector<SummaryEntry> summarize_all(const std::vector<ConditionMean>& means);

// < 1000: decimal digits; otherwise floor(tokens / 1000) followed by "K".
std::string format_budget_label(TokenCount tokens);
std::string format_score(double value);      // "0.426"
std::string format_delta(double value);      // "+0.027"
std::string format_delta_pct(double value);  // "+6.8%"

// "0-shot & Best & Best@ & delta & delta%" cells of one row.
std::vector<std::string> summary_cells(const SummaryRow& row);

// "JV→EN" from the language table's abbreviations.
std::string direction_label(const std::string& source_lang, const std::string& target_lang,
                            const LanguageTable& languages = LanguageTable::defaults());

std::string summary_text_table(const std::vector<SummaryEntry>& entries,
                               const LanguageTable& languages = LanguageTable::defaults());
std::string summary_csv(const std::vector<SummaryEntry>& entries,
                        const LanguageTable& languages = LanguageTable::defaults());

// Writes curves_<metric>.csv (every model and direction), one
// curve_<model>_<src>-<tgt>_<metric>.csv per model and direction, and
// output_tokens.csv (averaged over directions). Returns the written paths.
std::vector<std::filesystem::path> emit_curves(const std::vector<RunRecord>& records,
                                               const std::string& metric,
                                               const std::filesystem::path& out_dir);

struct RungDelta {
  TokenCount rung;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t n_pairs = 0;
  double delta() const { return mean_b - mean_a; }
};

struct SamplingComparison {
  std::size_t n_pairs = 0;
  std::optional<TTestResult> ttest;  // absent when the differences have zero variance
  std::string note;
  std::vector<RungDelta> per_rung;
};

// Pairs condition means (rung > 0) matched on (model, corpus type, direction,
// rung) and runs the paired t-test a vs b. Throws NoMatchedConditions; a
// zero-variance difference throws MetricsError(zero_variance).
TTestResult compare_sampling_ttest(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b,
                                   const std::string& metric = kChrfMetric);
// Same pairing, with the zero-variance case reported as "no detectable
// difference" in `note` instead of thrown.
SamplingComparison compare_sampling(const std::vector<RunRecord>& a,
                                    const std::vector<RunRecord>& b,
                                    const std::string& metric = kChrfMetric);

}  // namespace manyshot
