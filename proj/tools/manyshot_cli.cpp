#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "manyshot/analysis.hpp"
#include "manyshot/comet_client.hpp"
#include "manyshot/corpus.hpp"
#include "manyshot/inference.hpp"
#include "manyshot/metrics.hpp"
#include "manyshot/mock_endpoint.hpp"
#include "manyshot/prompt.hpp"
#include "manyshot/refinery.hpp"
#include "manyshot/synthesis.hpp"
#include "manyshot/tokenizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace manyshot;

namespace {

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> read_texts(const fs::path& path) {
  std::vector<std::string> out;
  for (const auto& rec : read_corpus(path, CorpusSchema::monolingual)) {
    out.push_back(std::get<MonolingualRecord>(rec).text);
  }
  return out;
}

void write_texts(const fs::path& path, const std::vector<std::string>& texts) {
  std::vector<CorpusRecord> records;
  records.reserve(texts.size());
  for (const auto& t : texts) records.push_back(MonolingualRecord{t});
  write_corpus(path, records);
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<double> read_numbers(const fs::path& path) {
  std::vector<double> out;
  for (const auto& line : read_lines(path)) {
    const auto comma = line.rfind(',');
    const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      out.push_back(v);
    } catch (const std::exception&) {
      if (!out.empty()) throw std::runtime_error("non-numeric value in " + path.string() + ": " + line);
    }
  }
  return out;
}

// Per-result comet scores stored next to a run store, aligned to its results.
std::optional<std::vector<double>> load_comet_scores(const fs::path& dir,
                                                     const std::vector<GenerationResult>& results) {
  const fs::path path = dir / "comet_scores.jsonl";
  if (!fs::exists(path)) return std::nullopt;
  std::map<std::pair<std::string, std::size_t>, double> by_key;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.contains("score") && j["score"].is_number()) {
      by_key[{j.at("key").get<std::string>(), j.at("example_index").get<std::size_t>()}] =
          j["score"].get<double>();
    }
  }
  std::vector<double> scores;
  for (const auto& r : results) {
    auto it = by_key.find({r.condition.key(), r.example_index});
    if (it == by_key.end()) return std::nullopt;
    scores.push_back(it->second);
  }
  return scores;
}

std::vector<RunRecord> records_for(const fs::path& dir, const MetricConfig& cfg) {
  const RunStore store = load_store(dir);
  if (store.header.is_null()) throw std::runtime_error("no run store in " + dir.string());
  auto records = build_run_records(store.results, cfg);
  if (auto comet = load_comet_scores(dir, store.results)) {
    attach_segment_metric(records, store.results, *comet, kCometMetric);
  }
  return records;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Many-shot in-context translation toolkit for low-resource languages"};
  app.require_subcommand(1);
  app.footer(std::string("Token budgets: ") + std::string(kApproximateRule) +
             " Pass a merges file (one 'a b' rule per line, optional '#version' header) with "
             "--tokenizer to count with a BPE merge table instead.");

  // count-tokens
  auto* count_cmd = app.add_subcommand("count-tokens", "Count tokens in a text file or string");
  std::string tok_spec = "approximate";
  std::string count_file;
  std::string count_text;
  count_cmd->add_option("--tokenizer", tok_spec, "approximate or a merges file");
  count_cmd->add_option("--file", count_file, "Count the whole file");
  count_cmd->add_option("--text", count_text, "Count this string");

  // refine filter / sample
  auto* refine_cmd = app.add_subcommand("refine", "Clean and sample monolingual corpora");
  refine_cmd->require_subcommand(1);
  auto* filter_cmd = refine_cmd->add_subcommand("filter", "Segment and filter sentences");
  std::string filter_in, filter_out, filter_report;
  bool no_segment = false;
  FilterConfig fcfg;
  filter_cmd->add_option("--in", filter_in, "Monolingual JSONL ({\"text\": ...})")->required();
  filter_cmd->add_option("--out", filter_out, "Kept sentences JSONL")->required();
  filter_cmd->add_option("--report", filter_report, "Rejection histogram JSON");
  filter_cmd->add_flag("--no-segment", no_segment, "Treat each record as one sentence");
  filter_cmd->add_option("--min-words", fcfg.min_words)->capture_default_str();
  filter_cmd->add_option("--max-words", fcfg.max_words)->capture_default_str();
  filter_cmd->add_option("--max-digit-ratio", fcfg.max_digit_ratio)->capture_default_str();
  filter_cmd->add_option("--max-punct-ratio", fcfg.max_punct_ratio)->capture_default_str();
  filter_cmd->add_option("--max-upper-ratio", fcfg.max_upper_ratio)->capture_default_str();
  filter_cmd->add_option("--max-nonlatin-ratio", fcfg.max_nonlatin_ratio)->capture_default_str();
  bool allow_no_terminal = false;
  filter_cmd->add_flag("--allow-no-terminal", allow_no_terminal, "Accept sentences without final punctuation");

  auto* sample_cmd = refine_cmd->add_subcommand("sample", "Diversity-driven sampling under a token budget");
  std::string sample_in, sample_out, sample_tok = "approximate";
  SamplerConfig scfg;
  std::uint64_t budget = scfg.token_budget.value;
  sample_cmd->add_option("--in", sample_in)->required();
  sample_cmd->add_option("--out", sample_out)->required();
  sample_cmd->add_option("--budget", budget)->capture_default_str();
  sample_cmd->add_option("--seed", scfg.seed, "0 keeps input order")->capture_default_str();
  sample_cmd->add_option("--min-avg-word-len", scfg.min_avg_word_len)->capture_default_str();
  sample_cmd->add_option("--tokenizer", sample_tok)->capture_default_str();

  // synthesize
  auto* synth_cmd = app.add_subcommand("synthesize", "Translate sampled sentences into reference languages");
  std::string synth_pool, synth_src, synth_refs, synth_out, synth_failures, synth_pairs, synth_reason = "minimal";
  EndpointConfig synth_ep;
  int synth_attempts = 3;
  synth_cmd->add_option("--pool", synth_pool)->required();
  synth_cmd->add_option("--src", synth_src, "Low-resource language code")->required();
  synth_cmd->add_option("--refs", synth_refs, "Comma-separated reference codes")->required();
  synth_cmd->add_option("--endpoint", synth_ep.base_url, "Base URL, e.g. https://host/v1")->required();
  synth_cmd->add_option("--model", synth_ep.model_id);
  synth_cmd->add_option("--api-key-env", synth_ep.api_key_env, "Environment variable holding the key");
  synth_cmd->add_option("--parallelism", synth_ep.parallelism)->capture_default_str();
  synth_cmd->add_option("--attempts", synth_attempts)->capture_default_str();
  synth_cmd->add_option("--reasoning", synth_reason, "minimal or default")->capture_default_str();
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--failures", synth_failures, "Failure report JSON");
  synth_cmd->add_option("--pairs-dir", synth_pairs, "Also write one parallel corpus per reference language");

  // build-prompts
  auto* bp_cmd = app.add_subcommand("build-prompts", "Pack shots for every rung and render prompts");
  std::string bp_corpus, bp_type = "parallel", bp_rungs = "7..20", bp_mode = "first_k", bp_eval,
                         bp_template = "default", bp_out, bp_tok = "approximate", bp_src, bp_tgt;
  std::uint64_t bp_seed = 0;
  bp_cmd->add_option("--corpus", bp_corpus)->required();
  bp_cmd->add_option("--type", bp_type, "monolingual, instruction, parallel or a corpus type")->capture_default_str();
  bp_cmd->add_option("--rungs", bp_rungs, "Exponent range a..b or a comma list of token counts")->capture_default_str();
  bp_cmd->add_option("--mode", bp_mode, "first_k or random_k")->capture_default_str();
  bp_cmd->add_option("--seed", bp_seed)->capture_default_str();
  bp_cmd->add_option("--eval", bp_eval, "source_file,target_file")->required();
  bp_cmd->add_option("--src-lang", bp_src, "Source language code")->required();
  bp_cmd->add_option("--tgt-lang", bp_tgt, "Target language code")->required();
  bp_cmd->add_option("--template", bp_template, "default or qwen-prefix")->capture_default_str();
  bp_cmd->add_option("--tokenizer", bp_tok)->capture_default_str();
  bp_cmd->add_option("--out", bp_out)->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "Run an evaluation sweep");
  std::string run_exp, run_out;
  bool run_mock = false;
  run_cmd->add_option("--experiment", run_exp, "Experiment JSON")->required();
  run_cmd->add_option("--out", run_out)->required();
  run_cmd->add_flag("--mock", run_mock, "Serve the deterministic echo-with-noise model in-process");

  // score / ttest
  auto* score_cmd = app.add_subcommand("score", "ChrF++ for line-aligned hypothesis and reference files");
  std::string score_hyp, score_ref, score_mode = "segment_macro", score_out;
  score_cmd->add_option("--hyp", score_hyp)->required();
  score_cmd->add_option("--ref", score_ref)->required();
  score_cmd->add_option("--mode", score_mode, "segment_macro or corpus_micro")->capture_default_str();
  score_cmd->add_option("--out", score_out, "Per-segment breakdown JSONL");

  auto* ttest_cmd = app.add_subcommand("ttest", "Paired t-test over two aligned columns of scores");
  std::string tt_a, tt_b;
  ttest_cmd->add_option("--a", tt_a)->required();
  ttest_cmd->add_option("--b", tt_b)->required();

  // summarize / curves / compare-sampling
  std::string metric = kChrfMetric, agg = "segment_macro";
  auto* sum_cmd = app.add_subcommand("summarize", "0-shot / Best / Best@ / delta tables");
  std::string sum_runs, sum_out;
  sum_cmd->add_option("--runs", sum_runs)->required();
  sum_cmd->add_option("--metric", metric)->capture_default_str();
  sum_cmd->add_option("--aggregation", agg)->capture_default_str();
  sum_cmd->add_option("--out", sum_out, "Directory for summary.csv and summary.txt");

  auto* curves_cmd = app.add_subcommand("curves", "Score and output-length curves as CSV");
  std::string curves_runs, curves_out;
  curves_cmd->add_option("--runs", curves_runs)->required();
  curves_cmd->add_option("--out", curves_out)->required();
  curves_cmd->add_option("--metric", metric)->capture_default_str();
  curves_cmd->add_option("--aggregation", agg)->capture_default_str();

  auto* cmp_cmd = app.add_subcommand("compare-sampling", "First-k vs random-k paired comparison");
  std::string cmp_a, cmp_b, cmp_out;
  cmp_cmd->add_option("--a", cmp_a, "First-k run store")->required();
  cmp_cmd->add_option("--b", cmp_b, "Random-k run store")->required();
  cmp_cmd->add_option("--metric", metric)->capture_default_str();
  cmp_cmd->add_option("--out", cmp_out, "Per-rung deltas CSV");

  // mock-endpoint / comet-score
  auto* mock_cmd = app.add_subcommand("mock-endpoint", "Serve a deterministic chat-completions mock");
  int mock_port = 8089;
  std::string mock_mode = "echo-noise";
  mock_cmd->add_option("--port", mock_port)->capture_default_str();
  mock_cmd->add_option("--mode", mock_mode, "echo-noise or uppercase")->capture_default_str();

  auto* comet_cmd = app.add_subcommand("comet-score", "Score a run store through a COMET sidecar");
  std::string comet_runs, comet_sidecar;
  comet_cmd->add_option("--runs", comet_runs)->required();
  comet_cmd->add_option("--sidecar", comet_sidecar, "Sidecar command line")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*count_cmd) {
      const auto tok = load_tokenizer(TokenizerSpec::parse(tok_spec));
      std::string text = count_text;
      if (!count_file.empty()) {
        std::ifstream in(count_file, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + count_file);
        text.assign(std::istreambuf_iterator<char>(in), {});
      }
      fmt::print("{}\n", tok->count(text).value);
    } else if (*filter_cmd) {
      fcfg.require_terminal_punct = !allow_no_terminal;
      std::vector<std::string> sentences;
      for (const auto& t : read_texts(filter_in)) {
        if (no_segment) {
          sentences.push_back(t);
        } else {
          for (auto& s : segment_sentences(t)) sentences.push_back(std::move(s));
        }
      }
      const FilterResult result = filter_corpus(sentences, fcfg);
      write_texts(filter_out, result.kept);
      json report = json::object();
      for (const auto& [code, n] : result.rejections) report[code] = n;
      if (!filter_report.empty()) write_json(filter_report, report);
      fmt::print("{} of {} sentences kept\n", result.kept.size(), sentences.size());
    } else if (*sample_cmd) {
      scfg.token_budget = {budget};
      const auto tok = load_tokenizer(TokenizerSpec::parse(sample_tok));
      const SampleResult result = sample_diverse(read_texts(sample_in), scfg, *tok);
      write_texts(sample_out, result.selected);
      fmt::print("{} sentences, {} tokens, {} distinct words\n", result.selected.size(),
                 result.vocabulary.total_tokens.value, result.vocabulary.counts.size());
    } else if (*synth_cmd) {
      const LanguageTable langs = LanguageTable::defaults();
      SynthesisJob job;
      job.sentences = read_texts(synth_pool);
      job.source_lang = langs.resolve(synth_src);
      for (const auto& code : split_list(synth_refs)) job.reference_langs.push_back(langs.resolve(code));
      job.endpoint = synth_ep;
      job.max_attempts = synth_attempts;
      job.reasoning_mode = synth_reason == "default" ? ReasoningMode::default_mode : ReasoningMode::minimal;
      const HttpChatBackend backend(synth_ep);
      const SynthesisOutput out = translate_batch(job, backend, langs);
      {
        std::ofstream f(synth_out);
        for (const auto& t : out.triplets) f << to_jsonl_line(t) << '\n';
      }
      if (!synth_failures.empty()) write_json(synth_failures, failures_json(out.failures));
      if (!synth_pairs.empty()) {
        fs::create_directories(synth_pairs);
        for (const auto& ref : job.reference_langs) {
          std::vector<CorpusRecord> records;
          for (const auto& t : out.triplets) {
            records.push_back(ParallelRecord{ref, job.source_lang, t.translations.at(ref.code), t.target_text});
          }
          write_corpus(fs::path(synth_pairs) / ("parallel_" + ref.code + ".jsonl"), records);
        }
      }
      fmt::print("{} triplets, {} failures\n", out.triplets.size(), out.failures.size());
    } else if (*bp_cmd) {
      const LanguageTable langs = LanguageTable::defaults();
      CorpusSchema schema;
      try {
        schema = parse_schema(bp_type);
      } catch (const std::exception&) {
        schema = schema_of(parse_corpus_type(bp_type));
      }
      const auto shots = format_shots(read_corpus(bp_corpus, schema, langs), schema);
      const auto files = split_list(bp_eval);
      if (files.size() != 2) throw std::invalid_argument("--eval expects source_file,target_file");
      const auto examples = align_eval_set(files[0], files[1], langs.resolve(bp_src), langs.resolve(bp_tgt));
      const auto tmpl = PromptTemplate::named(bp_template);
      const auto tok = load_tokenizer(TokenizerSpec::parse(bp_tok));
      const auto mode = parse_selection_mode(bp_mode);
      fs::create_directories(bp_out);
      for (const TokenCount rung : BudgetLadder::parse(bp_rungs).rungs) {
        const PackedContext packed = mode == SelectionMode::first_k
                                         ? pack_first_k(shots, rung, *tok)
                                         : pack_random_k(shots, rung, *tok, bp_seed);
        std::ofstream f(fs::path(bp_out) / fmt::format("rung_{}.jsonl", rung.value));
        for (std::size_t i = 0; i < examples.size(); ++i) {
          const auto p = assemble_prompt(packed, examples[i], tmpl);
          f << json{{"system", p.system_text}, {"user", p.user_text},
                    {"example_id", bp_src + ">" + bp_tgt + "#" + std::to_string(i)},
                    {"rung", rung.value}, {"n_shots", packed.n_shots},
                    {"shot_tokens", packed.shot_tokens.value}}
                   .dump()
            << '\n';
        }
      }
    } else if (*run_cmd) {
      ExperimentConfig x = load_experiment(run_exp);
      std::unique_ptr<MockChatServer> mock;
      if (run_mock) {
        mock = std::make_unique<MockChatServer>();
        x.endpoint.base_url = mock->base_url();
      }
      const SweepStats stats = run_sweep(x, run_out);
      for (const auto& w : stats.warnings) fmt::print(stderr, "warning: {}\n", w);
      fmt::print("{} conditions run, {} skipped, {} results, {} failures\n", stats.conditions_run,
                 stats.conditions_skipped, stats.results_written, stats.failures);
    } else if (*score_cmd) {
      MetricConfig cfg;
      cfg.aggregation = parse_aggregation(score_mode);
      const auto hyps = read_lines(score_hyp);
      const auto refs = read_lines(score_ref);
      if (hyps.size() != refs.size()) {
        throw std::runtime_error(fmt::format("{} hypotheses vs {} references", hyps.size(), refs.size()));
      }
      std::vector<std::pair<std::string, std::string>> pairs;
      std::ofstream seg;
      if (!score_out.empty()) seg.open(score_out);
      for (std::size_t i = 0; i < hyps.size(); ++i) {
        pairs.emplace_back(hyps[i], refs[i]);
        if (seg) {
          const auto b = chrf_pp(hyps[i], refs[i], cfg);
          json chars = json::array(), words = json::array();
          for (const auto& o : b.char_orders) chars.push_back({{"p", o.precision}, {"r", o.recall}, {"f", o.f}});
          for (const auto& o : b.word_orders) words.push_back({{"p", o.precision}, {"r", o.recall}, {"f", o.f}});
          seg << json{{"index", i}, {"chrf_pp", b.score}, {"char", chars}, {"word", words}}.dump() << '\n';
        }
      }
      fmt::print("chrF++ ({}) = {:.6f} over {} segments\n", score_mode, corpus_chrf_pp(pairs, cfg), pairs.size());
    } else if (*ttest_cmd) {
      const auto r = paired_t_test(read_numbers(tt_a), read_numbers(tt_b));
      fmt::print("t = {:.6f}, p = {:.6f}, n = {}, dof = {}\n", r.t, r.p, r.n, r.dof);
    } else if (*sum_cmd) {
      MetricConfig cfg;
      cfg.aggregation = parse_aggregation(agg);
      const auto entries = summarize_all(aggregate_runs(records_for(sum_runs, cfg), metric));
      const std::string text = summary_text_table(entries);
      fmt::print("{}", text);
      if (!sum_out.empty()) {
        fs::create_directories(sum_out);
        std::ofstream(fs::path(sum_out) / fmt::format("summary_{}.csv", metric)) << summary_csv(entries);
        std::ofstream(fs::path(sum_out) / fmt::format("summary_{}.txt", metric)) << text;
      }
    } else if (*curves_cmd) {
      MetricConfig cfg;
      cfg.aggregation = parse_aggregation(agg);
      for (const auto& p : emit_curves(records_for(curves_runs, cfg), metric, curves_out)) {
        fmt::print("{}\n", p.string());
      }
    } else if (*cmp_cmd) {
      const auto cmp = compare_sampling(records_for(cmp_a, {}), records_for(cmp_b, {}), metric);
      if (cmp.ttest) {
        fmt::print("t = {:.4f}, p = {:.4f} over {} paired condition means\n", cmp.ttest->t, cmp.ttest->p, cmp.n_pairs);
      } else {
        fmt::print("{} ({} pairs)\n", cmp.note, cmp.n_pairs);
      }
      fmt::print("pairing: {}\n", cmp.ttest ? cmp.note : "condition means");
      std::string csv = "rung,mean_a,mean_b,delta,n_pairs\n";
      for (const auto& d : cmp.per_rung) {
        csv += fmt::format("{},{:.6f},{:.6f},{:+.6f},{}\n", d.rung.value, d.mean_a, d.mean_b, d.delta(), d.n_pairs);
      }
      if (!cmp_out.empty()) {
        std::ofstream(cmp_out) << csv;
      } else {
        fmt::print("{}", csv);
      }
    } else if (*mock_cmd) {
      MockChatServer server(mock_mode == "uppercase" ? MockResponder(uppercase_echo)
                                                     : MockResponder(echo_with_noise),
                            mock_port);
      fmt::print("serving {} (Ctrl-C to stop)\n", server.base_url());
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
    } else if (*comet_cmd) {
      const RunStore store = load_store(comet_runs);
      std::vector<std::string> args = split_list(comet_sidecar, ' ');
      CometSidecar sidecar(args);
      std::vector<CometRequest> requests;
      for (std::size_t i = 0; i < store.results.size(); ++i) {
        const auto& r = store.results[i];
        requests.push_back({static_cast<long long>(i), r.source_text, r.output_text, r.reference_text});
      }
      const auto responses = sidecar.score_batch(requests);
      std::ofstream out(fs::path(comet_runs) / "comet_scores.jsonl");
      std::size_t errors = 0;
      for (std::size_t i = 0; i < responses.size(); ++i) {
        json j = {{"key", store.results[i].condition.key()}, {"example_index", store.results[i].example_index}};
        if (responses[i].score) j["score"] = *responses[i].score;
        if (responses[i].error) {
          j["error"] = *responses[i].error;
          ++errors;
        }
        out << j.dump() << '\n';
      }
      fmt::print("{} scored with {}, {} errors\n", responses.size(), sidecar.model(), errors);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
