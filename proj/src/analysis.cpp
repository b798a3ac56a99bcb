#include "manyshot/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

namespace manyshot {

namespace fs = std::filesystem;

namespace {

using RecordKey = std::pair<std::string, std::string>;  // model, condition key

GroupKey group_of(const std::string& model, const Condition& c) {
  return {model, c.corpus_label(), c.source_lang, c.target_lang};
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "model" : out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

std::vector<RunRecord> build_run_records(const std::vector<GenerationResult>& results,
                                         const MetricConfig& cfg) {
  std::map<RecordKey, std::vector<const GenerationResult*>> groups;
  for (const auto& r : results) groups[{r.model_id, r.condition.key()}].push_back(&r);

  std::vector<RunRecord> records;
  records.reserve(groups.size());
  for (const auto& [key, rows] : groups) {
    RunRecord rec;
    rec.model_id = key.first;
    rec.condition = rows.front()->condition;
    rec.n_examples = rows.size();
    std::vector<std::pair<std::string, std::string>> pairs;
    double tokens = 0.0;
    for (const auto* r : rows) {
      pairs.emplace_back(r->output_text, r->reference_text);
      tokens += static_cast<double>(r->output_tokens.value);
    }
    rec.mean_output_tokens = tokens / static_cast<double>(rows.size());
    rec.scores[kChrfMetric] = corpus_chrf_pp(pairs, cfg);
    records.push_back(std::move(rec));
  }
  return records;
}

void attach_segment_metric(std::vector<RunRecord>& records,
                           const std::vector<GenerationResult>& results,
                           const std::vector<double>& scores, const std::string& metric) {
  if (scores.size() != results.size()) {
    throw std::invalid_argument("segment scores do not align with results");
  }
  std::map<RecordKey, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& [sum, n] = acc[{results[i].model_id, results[i].condition.key()}];
    sum += scores[i];
    ++n;
  }
  for (auto& rec : records) {
    auto it = acc.find({rec.model_id, rec.condition.key()});
    if (it != acc.end()) rec.scores[metric] = it->second.first / static_cast<double>(it->second.second);
  }
}

std::vector<ConditionMean> aggregate_runs(const std::vector<RunRecord>& records,
                                          const std::string& metric) {
  std::map<std::pair<GroupKey, std::uint64_t>, std::vector<double>> acc;
  for (const auto& rec : records) {
    auto it = rec.scores.find(metric);
    if (it == rec.scores.end()) continue;
    acc[{group_of(rec.model_id, rec.condition), rec.condition.rung.value}].push_back(it->second);
  }
  std::vector<ConditionMean> out;
  for (const auto& [key, values] : acc) {
    ConditionMean m;
    m.group = key.first;
    m.rung = {key.second};
    m.n_runs = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - m.mean) * (v - m.mean);
      m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ConditionMean> replicate_zero_shot(const std::vector<ConditionMean>& means) {
  std::map<GroupKey, const ConditionMean*> zero;
  std::set<GroupKey> typed;
  for (const auto& m : means) {
    if (m.group.corpus_label == kZeroShotLabel) {
      zero[{m.group.model_id, "", m.group.source_lang, m.group.target_lang}] = &m;
    } else {
      typed.insert(m.group);
    }
  }
  std::vector<ConditionMean> out;
  for (const auto& g : typed) {
    auto it = zero.find({g.model_id, "", g.source_lang, g.target_lang});
    if (it == zero.end()) continue;
    ConditionMean copy = *it->second;
    copy.group = g;
    out.push_back(std::move(copy));
  }
  for (const auto& m : means) {
    if (m.group.corpus_label != kZeroShotLabel) out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const ConditionMean& a, const ConditionMean& b) {
    return std::tie(a.group, a.rung) < std::tie(b.group, b.rung);
  });
  return out;
}

SummaryRow summarize(const std::vector<std::pair<TokenCount, double>>& rung_means) {
  std::optional<double> zero;
  std::optional<std::pair<TokenCount, double>> best;
  auto sorted = rung_means;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [rung, mean] : sorted) {
    if (rung.value == 0) {
      zero = mean;
    } else if (!best || mean > best->second) {
      best = {rung, mean};
    }
  }
  if (!zero) throw AnalysisError(AnalysisErrc::missing_zero_shot, "no zero-shot mean to compare against");
  if (!best) throw AnalysisError(AnalysisErrc::no_shot_rungs, "no rung above zero-shot");
  SummaryRow row;
  row.zero_shot = *zero;
  row.best = best->second;
  row.best_at = best->first;
  row.delta = row.best - row.zero_shot;
  row.delta_pct = 100.0 * row.delta / row.zero_shot;
  return row;
}

std::vector<SummaryEntry> summarize_all(const std::vector<ConditionMean>& means) {
  std::map<GroupKey, double> zero;
  std::map<GroupKey, std::vector<std::pair<TokenCount, double>>> groups;
  for (const auto& m : means) {
    if (m.group.corpus_label == kZeroShotLabel) {
      zero[{m.group.model_id, "", m.group.source_lang, m.group.target_lang}] = m.mean;
    } else {
      groups[m.group].emplace_back(m.rung, m.mean);
    }
  }
  std::vector<SummaryEntry> out;
  for (auto& [g, rungs] : groups) {
    auto it = zero.find({g.model_id, "", g.source_lang, g.target_lang});
    if (it == zero.end()) {
      throw AnalysisError(AnalysisErrc::missing_zero_shot,
                          "no zero-shot results for " + g.model_id + " " + g.source_lang + ">" +
                              g.target_lang);
    }
    rungs.emplace_back(TokenCount{0}, it->second);
    out.push_back({g, summarize(rungs)});
  }
  return out;
}

std::string format_budget_label(TokenCount tokens) {
  if (tokens.value < 1000) return std::to_string(tokens.value);
  return std::to_string(tokens.value / 1000) + "K";
}

std::string format_score(double value) { return fmt::format("{:.3f}", value + 0.0); }

std::string format_delta(double value) {
  std::string s = fmt::format("{:+.3f}", value);
  if (s == "-0.000") s = "+0.000";
  return s;
}

std::string format_delta_pct(double value) {
  std::string s = fmt::format("{:+.1f}", value);
  if (s == "-0.0") s = "+0.0";
  return s + "%";
}

std::vector<std::string> summary_cells(const SummaryRow& row) {
  return {format_score(row.zero_shot), format_score(row.best), format_budget_label(row.best_at),
          format_delta(row.delta), format_delta_pct(row.delta_pct)};
}

std::string direction_label(const std::string& source_lang, const std::string& target_lang,
                            const LanguageTable& languages) {
  auto abbrev = [&](const std::string& code) {
    return languages.contains(code) ? languages.entry(code).abbrev : code;
  };
  return abbrev(source_lang) + "→" + abbrev(target_lang);
}

namespace {

std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

std::string summary_text_table(const std::vector<SummaryEntry>& entries,
                               const LanguageTable& languages) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Model", "Corpus", "Direction", "0-shot", "Best", "Best@", "Δ", "Δ%"});
  for (const auto& e : entries) {
    std::vector<std::string> row{e.group.model_id, e.group.corpus_label,
                                 direction_label(e.group.source_lang, e.group.target_lang, languages)};
    for (auto& cell : summary_cells(e.row)) row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], display_width(row[c]));
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) out += "  ";
      out += rows[r][c];
      if (c + 1 < rows[r].size()) out.append(widths[c] - display_width(rows[r][c]), ' ');
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      out.append(total + 2 * (widths.size() - 1), '-');
      out += '\n';
    }
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryEntry>& entries, const LanguageTable& languages) {
  std::string out =
      "model,corpus_type,direction,zero_shot,best,best_at,best_at_tokens,delta,delta_pct\n";
  for (const auto& e : entries) {
    const auto cells = summary_cells(e.row);
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(e.group.model_id),
                       e.group.corpus_label,
                       direction_label(e.group.source_lang, e.group.target_lang, languages),
                       cells[0], cells[1], cells[2], e.row.best_at.value, cells[3], cells[4]);
  }
  return out;
}

std::vector<fs::path> emit_curves(const std::vector<RunRecord>& records, const std::string& metric,
                                  const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const auto means = replicate_zero_shot(aggregate_runs(records, metric));

  std::string combined = "model,src_lang,tgt_lang,rung,corpus_type,mean,stddev,n_runs\n";
  std::map<std::tuple<std::string, std::string, std::string>, std::string> per_curve;
  for (const auto& m : means) {
    const std::string row = fmt::format("{},{},{:.6f},{:.6f},{}\n", m.rung.value,
                                        m.group.corpus_label, m.mean, m.stddev, m.n_runs);
    combined += fmt::format("{},{},{},", csv_field(m.group.model_id), m.group.source_lang,
                            m.group.target_lang) +
                row;
    per_curve[{m.group.model_id, m.group.source_lang, m.group.target_lang}] += row;
  }
  written.push_back(out_dir / fmt::format("curves_{}.csv", sanitize(metric)));
  write_file(written.back(), combined);
  for (const auto& [key, rows] : per_curve) {
    const auto& [model, src, tgt] = key;
    written.push_back(out_dir / fmt::format("curve_{}_{}-{}_{}.csv", sanitize(model), src, tgt,
                                            sanitize(metric)));
    write_file(written.back(), "rung,corpus_type,mean,stddev,n_runs\n" + rows);
  }

  // Output length per (model, rung, corpus type), averaged over directions.
  std::map<std::tuple<std::string, std::uint64_t, std::string>, std::pair<double, std::size_t>> tok;
  for (const auto& rec : records) {
    auto& [sum, n] = tok[{rec.model_id, rec.condition.rung.value, rec.condition.corpus_label()}];
    sum += rec.mean_output_tokens;
    ++n;
  }
  std::string tokens = "model,rung,corpus_type,mean_output_tokens,n_conditions\n";
  for (const auto& [key, v] : tok) {
    tokens += fmt::format("{},{},{},{:.3f},{}\n", csv_field(std::get<0>(key)), std::get<1>(key),
                          std::get<2>(key), v.first / static_cast<double>(v.second), v.second);
  }
  written.push_back(out_dir / "output_tokens.csv");
  write_file(written.back(), tokens);
  return written;
}

namespace {

struct Paired {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<RungDelta> per_rung;
};

Paired pair_conditions(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b,
                       const std::string& metric) {
  auto index = [&](const std::vector<RunRecord>& records) {
    std::map<std::pair<GroupKey, std::uint64_t>, double> out;
    for (const auto& m : aggregate_runs(records, metric)) {
      if (m.rung.value == 0 || m.group.corpus_label == kZeroShotLabel) continue;
      out[{m.group, m.rung.value}] = m.mean;
    }
    return out;
  };
  const auto ia = index(a);
  const auto ib = index(b);
  Paired p;
  std::map<std::uint64_t, RungDelta> rungs;
  for (const auto& [key, va] : ia) {
    auto it = ib.find(key);
    if (it == ib.end()) continue;
    p.a.push_back(va);
    p.b.push_back(it->second);
    auto& d = rungs[key.second];
    d.rung = {key.second};
    d.mean_a += va;
    d.mean_b += it->second;
    ++d.n_pairs;
  }
  if (p.a.empty()) {
    throw AnalysisError(AnalysisErrc::no_matched_conditions,
                        "no (model, corpus type, direction, rung) condition appears in both stores");
  }
  for (auto& [rung, d] : rungs) {
    d.mean_a /= static_cast<double>(d.n_pairs);
    d.mean_b /= static_cast<double>(d.n_pairs);
    p.per_rung.push_back(d);
  }
  return p;
}

}  // namespace

TTestResult compare_sampling_ttest(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b,
                                   const std::string& metric) {
  const Paired p = pair_conditions(a, b, metric);
  return paired_t_test(p.a, p.b);
}

SamplingComparison compare_sampling(const std::vector<RunRecord>& a,
                                    const std::vector<RunRecord>& b, const std::string& metric) {
  Paired p = pair_conditions(a, b, metric);
  SamplingComparison out;
  out.n_pairs = p.a.size();
  out.per_rung = std::move(p.per_rung);
  try {
    out.ttest = paired_t_test(p.a, p.b);
    out.note = "paired over condition means (model, corpus type, direction, rung > 0)";
  } catch (const MetricsError& e) {
    if (e.code() != MetricsErrc::zero_variance) throw;
    out.note = "no detectable difference: the paired differences have zero variance";
  }
  return out;
}

}  // namespace manyshot
