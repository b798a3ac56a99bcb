#include <doctest.h>

#include <iterator>
#include <sstream>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "manyshot/analysis.hpp"
#include "support/temp_dir.hpp"

using namespace manyshot;

namespace {

RunRecord rec(const std::string& model, std::optional<CorpusType> type, const std::string& src,
              const std::string& tgt, std::uint64_t rung, int run, double score, double out_tokens = 10) {
  RunRecord r;
  r.model_id = model;
  r.condition = {type, src, tgt, {rung}, run};
  r.scores[kChrfMetric] = score;
  r.mean_output_tokens = out_tokens;
  r.n_examples = 20;
  return r;
}

std::vector<RunRecord> headline_records() {
  const auto U = CorpusType::unsupervised;
  const auto S = CorpusType::supervised_id;
  return {
      rec("qwen", std::nullopt, "jav_Latn", "eng_Latn", 0, 0, 0.399),
      rec("qwen", U, "jav_Latn", "eng_Latn", 128, 0, 0.40),
      rec("qwen", U, "jav_Latn", "eng_Latn", 128, 1, 0.41),
      rec("qwen", U, "jav_Latn", "eng_Latn", 262144, 0, 0.426),
      rec("qwen", U, "jav_Latn", "eng_Latn", 262144, 1, 0.426),
      rec("nemotron", std::nullopt, "sun_Latn", "eng_Latn", 0, 0, 0.464),
      rec("nemotron", S, "sun_Latn", "eng_Latn", 512, 0, 0.47),
      rec("nemotron", S, "sun_Latn", "eng_Latn", 16384, 0, 0.50),
      rec("nemotron", S, "sun_Latn", "eng_Latn", 16384, 1, 0.514),
  };
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("published summary rows are reproduced from their condition means") {
  const auto a = summarize({{{0}, 0.399}, {{128}, 0.41}, {{262144}, 0.426}, {{1048576}, 0.42}});
  CHECK(summary_cells(a) == std::vector<std::string>{"0.399", "0.426", "262K", "+0.027", "+6.8%"});
  const auto b = summarize({{{0}, 0.464}, {{16384}, 0.507}, {{512}, 0.47}});
  CHECK(summary_cells(b) == std::vector<std::string>{"0.464", "0.507", "16K", "+0.043", "+9.3%"});
  // Percentages come from unrounded means: 0.3996 -> 0.4392 shows +9.9%, not the +9.75% of 0.400 -> 0.439.
  const auto c = summarize({{{0}, 0.3996}, {{128}, 0.4392}});
  CHECK(summary_cells(c) == std::vector<std::string>{"0.400", "0.439", "128", "+0.040", "+9.9%"});
}

TEST_CASE("budget labels floor to thousands") {
  CHECK(format_budget_label({512}) == "512");
  CHECK(format_budget_label({999}) == "999");
  CHECK(format_budget_label({1000}) == "1K");
  CHECK(format_budget_label({65536}) == "65K");
  CHECK(format_budget_label({262144}) == "262K");
  CHECK(format_budget_label({1048576}) == "1048K");
  CHECK(format_delta(-0.0001) == "+0.000");
  CHECK(format_delta(-0.012) == "-0.012");
  CHECK(format_delta_pct(-3.04) == "-3.0%");
}

TEST_CASE("best excludes zero-shot, ties go to the smaller rung, negative deltas allowed") {
  const auto tie = summarize({{{0}, 0.3}, {{1024}, 0.35}, {{256}, 0.35}});
  CHECK(tie.best_at.value == 256);
  const auto worse = summarize({{{0}, 0.5}, {{128}, 0.45}, {{256}, 0.40}});
  CHECK(worse.best == 0.45);
  CHECK(worse.delta < 0);
  CHECK(summary_cells(worse)[3] == "-0.050");
  CHECK(summary_cells(worse)[4] == "-10.0%");
  try {
    summarize({{{128}, 0.4}});
    FAIL("expected MissingZeroShot");
  } catch (const AnalysisError& e) {
    CHECK(e.code() == AnalysisErrc::missing_zero_shot);
  }
  try {
    summarize({{{0}, 0.4}});
    FAIL("expected NoShotRungs");
  } catch (const AnalysisError& e) {
    CHECK(e.code() == AnalysisErrc::no_shot_rungs);
  }
}

TEST_CASE("summary CSV from a synthetic store matches the hand-computed file") {
  const auto entries = summarize_all(aggregate_runs(headline_records()));
  REQUIRE(entries.size() == 2);
  CHECK(summary_csv(entries) == testing::slurp(testing::fixture("summary_golden.csv")));
  const auto table = summary_text_table(entries);
  const auto rows = lines_of(table);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("Model", 0) == 0);
  std::istringstream cells(rows[2]);
  const std::vector<std::string> row2{std::istream_iterator<std::string>(cells), {}};
  CHECK(row2 == std::vector<std::string>{"nemotron", "supervised_id", "SU→EN", "0.464", "0.507", "16K",
                                         "+0.043", "+9.3%"});
  CHECK(rows[3].size() == rows[2].size());
  CHECK(rows[3].find("JV→EN") != std::string::npos);

  auto missing = headline_records();
  missing.erase(missing.begin());
  CHECK_THROWS_AS(summarize_all(aggregate_runs(missing)), AnalysisError);
}

TEST_CASE("aggregation over runs agrees with a direct computation") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.2, 0.6);
  std::vector<RunRecord> records;
  std::map<std::pair<std::string, std::uint64_t>, std::vector<double>> oracle;
  for (const auto* type : {"unsupervised", "instructions"}) {
    for (std::uint64_t rung : {128u, 256u, 512u}) {
      for (int run = 0; run < 5; ++run) {
        const double s = u(rng);
        records.push_back(rec("m", parse_corpus_type(type), "eng_Latn", "jav_Latn", rung, run, s));
        oracle[{type, rung}].push_back(s);
      }
    }
  }
  const auto means = aggregate_runs(records);
  REQUIRE(means.size() == oracle.size());
  for (const auto& m : means) {
    const auto& v = oracle.at({m.group.corpus_label, m.rung.value});
    double mean = 0;
    for (double x : v) mean += x;
    mean /= v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    CHECK(m.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(m.stddev == doctest::Approx(std::sqrt(ss / (v.size() - 1))).epsilon(1e-12));
    CHECK(m.n_runs == 5);
  }
  RunRecord no_metric = records.front();
  no_metric.scores.clear();
  CHECK(aggregate_runs({no_metric}).empty());
}

TEST_CASE("run records are built from generation results") {
  std::vector<GenerationResult> results;
  for (int run = 0; run < 2; ++run) {
    for (std::size_t i = 0; i < 3; ++i) {
      GenerationResult r;
      r.model_id = "m";
      r.condition = {CorpusType::unsupervised, "jav_Latn", "eng_Latn", {128}, run};
      r.example_index = i;
      r.output_text = run == 0 ? "the cat sat" : "cat sat";
      r.reference_text = "the cat sat";
      r.output_tokens = {i + 1};
      results.push_back(r);
    }
  }
  auto records = build_run_records(results);
  REQUIRE(records.size() == 2);
  CHECK(records[0].scores.at(kChrfMetric) == doctest::Approx(1.0));
  CHECK(records[1].scores.at(kChrfMetric) == doctest::Approx(0.5736276646203116));
  CHECK(records[0].mean_output_tokens == 2.0);
  CHECK(records[0].n_examples == 3);
  attach_segment_metric(records, results, {0.1, 0.2, 0.3, 0.5, 0.5, 0.5}, kCometMetric);
  CHECK(records[0].scores.at(kCometMetric) == doctest::Approx(0.2));
  CHECK(records[1].scores.at(kCometMetric) == doctest::Approx(0.5));
  CHECK_THROWS(attach_segment_metric(records, results, {0.1}, kCometMetric));
}

TEST_CASE("curve files pivot the aggregated means") {
  testing::TempDir dir;
  auto records = headline_records();
  records.push_back(rec("qwen", CorpusType::instructions, "jav_Latn", "eng_Latn", 128, 0, 0.3, 40));
  const auto paths = emit_curves(records, kChrfMetric, dir.path());
  CHECK(paths.size() == 4);
  const auto qwen = lines_of(testing::slurp(dir / "curve_qwen_jav_Latn-eng_Latn_chrf_pp.csv"));
  const std::vector<std::string> expected_qwen = {
      "rung,corpus_type,mean,stddev,n_runs",
      "0,instructions,0.399000,0.000000,1",
      "128,instructions,0.300000,0.000000,1",
      "0,unsupervised,0.399000,0.000000,1",
      "128,unsupervised,0.405000,0.007071,2",
      "262144,unsupervised,0.426000,0.000000,2",
  };
  CHECK(qwen == expected_qwen);
  const auto combined = lines_of(testing::slurp(dir / "curves_chrf_pp.csv"));
  CHECK(combined.size() == 1 + 5 + 3);
  CHECK(combined[0] == "model,src_lang,tgt_lang,rung,corpus_type,mean,stddev,n_runs");
  const auto tokens = lines_of(testing::slurp(dir / "output_tokens.csv"));
  CHECK(tokens[0] == "model,rung,corpus_type,mean_output_tokens,n_conditions");
  CHECK(std::find(tokens.begin(), tokens.end(), "qwen,128,instructions,40.000,1") != tokens.end());

  testing::TempDir empty;
  emit_curves({}, kChrfMetric, empty.path());
  CHECK(testing::slurp(empty / "curves_chrf_pp.csv") ==
        "model,src_lang,tgt_lang,rung,corpus_type,mean,stddev,n_runs\n");
}

TEST_CASE("first-k vs random-k comparison") {
  std::vector<RunRecord> a, b;
  const double deltas[] = {0.01, 0.03, -0.005, 0.02};
  const std::uint64_t rungs[] = {128, 256, 512, 1024};
  for (int i = 0; i < 4; ++i) {
    a.push_back(rec("m", CorpusType::unsupervised, "eng_Latn", "jav_Latn", rungs[i], 0, 0.4));
    b.push_back(rec("m", CorpusType::unsupervised, "eng_Latn", "jav_Latn", rungs[i], 0, 0.4 + deltas[i]));
  }
  a.push_back(rec("m", std::nullopt, "eng_Latn", "jav_Latn", 0, 0, 0.3));
  b.push_back(rec("m", std::nullopt, "eng_Latn", "jav_Latn", 0, 0, 0.9));
  const auto cmp = compare_sampling(a, b);
  CHECK(cmp.n_pairs == 4);
  REQUIRE(cmp.ttest.has_value());
  std::vector<double> va(4, 0.4), vb;
  for (double d : deltas) vb.push_back(0.4 + d);
  const auto direct = paired_t_test(va, vb);
  CHECK(cmp.ttest->t == doctest::Approx(direct.t).epsilon(1e-12));
  CHECK(cmp.ttest->p == doctest::Approx(direct.p).epsilon(1e-12));
  REQUIRE(cmp.per_rung.size() == 4);
  CHECK(cmp.per_rung[1].delta() == doctest::Approx(0.03));

  // Identical stores: zero variance is reported, not thrown.
  const auto same = compare_sampling(a, a);
  CHECK_FALSE(same.ttest.has_value());
  CHECK(same.note.find("no detectable difference") != std::string::npos);
  CHECK_THROWS_AS(compare_sampling_ttest(a, a), MetricsError);

  std::vector<RunRecord> other{rec("x", CorpusType::unsupervised, "eng_Latn", "jav_Latn", 128, 0, 0.4)};
  try {
    compare_sampling(a, other);
    FAIL("expected NoMatchedConditions");
  } catch (const AnalysisError& e) {
    CHECK(e.code() == AnalysisErrc::no_matched_conditions);
  }
}

TEST_CASE("direction labels") {
  CHECK(direction_label("jav_Latn", "eng_Latn") == "JV→EN");
  CHECK(direction_label("eng_Latn", "sun_Latn") == "EN→SU");
  CHECK(direction_label("xx_Yyyy", "eng_Latn") == "xx_Yyyy→EN");
}
