#include "manyshot/inference.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

namespace manyshot {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  endpoint.validate();
  decoding.validate();
  prompt_template.validate();
  ladder.validate();
  if (ladder.rungs.empty()) throw std::invalid_argument("experiment ladder is empty");
  if (runs < 1) throw std::invalid_argument("experiment runs must be >= 1");
  for (const auto& [rung, n] : runs_per_rung) {
    if (n < 1) throw std::invalid_argument("runs_per_rung entries must be >= 1");
    (void)rung;
  }
  if (directions.empty()) throw std::invalid_argument("experiment lists no directions");
  std::set<CorpusType> seen;
  for (const auto& c : corpora) {
    if (!seen.insert(c.type).second) {
      throw std::invalid_argument("corpus type listed twice: " + std::string(to_string(c.type)));
    }
  }
  for (const auto& d : directions) {
    if (!languages.contains(d.source_lang) || !languages.contains(d.target_lang)) {
      throw std::invalid_argument("direction uses an unknown language: " + d.source_lang + ">" +
                                  d.target_lang);
    }
  }
}

int ExperimentConfig::runs_for(TokenCount rung) const {
  if (rung.value == 0) return 1;
  if (auto it = runs_per_rung.find(rung.value); it != runs_per_rung.end()) return it->second;
  return runs;
}

namespace {

fs::path resolve_path(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig parse_experiment(const json& doc, const fs::path& base_dir) {
  ExperimentConfig cfg;
  if (auto it = doc.find("languages"); it != doc.end()) {
    for (const auto& l : *it) {
      const auto code = l.at("code").get<std::string>();
      if (cfg.languages.contains(code)) continue;
      LanguageTable::Entry entry;
      entry.tag = {code, l.at("label").get<std::string>()};
      entry.abbrev = l.value("abbrev", std::string());
      entry.reference = l.value("reference", false);
      cfg.languages.add(std::move(entry));
    }
  }
  const json& ep = doc.at("endpoint");
  cfg.endpoint.base_url = ep.at("base_url").get<std::string>();
  cfg.endpoint.model_id = ep.value("model_id", std::string());
  cfg.endpoint.api_key_env = ep.value("api_key_env", std::string());
  cfg.endpoint.timeout_s = ep.value("timeout_s", cfg.endpoint.timeout_s);
  cfg.endpoint.max_retries = ep.value("max_retries", cfg.endpoint.max_retries);
  cfg.endpoint.parallelism = ep.value("parallelism", cfg.endpoint.parallelism);
  cfg.endpoint.backoff_base =
      std::chrono::milliseconds(ep.value("backoff_ms", cfg.endpoint.backoff_base.count()));
  if (ep.contains("extra_body")) cfg.endpoint.extra_body = ep.at("extra_body");

  if (auto it = doc.find("decoding"); it != doc.end()) {
    cfg.decoding.temperature = it->value("temperature", cfg.decoding.temperature);
    cfg.decoding.max_output_tokens = it->value("max_output_tokens", cfg.decoding.max_output_tokens);
    if (it->contains("stop")) cfg.decoding.stop = it->at("stop").get<std::vector<std::string>>();
  }
  if (auto it = doc.find("tokenizer"); it != doc.end()) {
    const auto spec = it->get<std::string>();
    cfg.tokenizer = spec == "approximate" ? TokenizerSpec::approximate()
                                          : TokenizerSpec::vocab_file(resolve_path(base_dir, spec));
  }
  if (auto it = doc.find("ladder"); it != doc.end()) {
    if (it->is_string()) {
      cfg.ladder = BudgetLadder::parse(it->get<std::string>());
    } else {
      cfg.ladder.rungs.clear();
      for (const auto& r : *it) cfg.ladder.rungs.push_back({r.get<std::uint64_t>()});
    }
  }
  if (auto it = doc.find("mode"); it != doc.end()) {
    cfg.mode = parse_selection_mode(it->get<std::string>());
  }
  cfg.runs = doc.value("runs", cfg.runs);
  if (auto it = doc.find("runs_per_rung"); it != doc.end()) {
    for (const auto& [k, v] : it->items()) cfg.runs_per_rung[std::stoull(k)] = v.get<int>();
  }
  cfg.seed = doc.value("seed", cfg.seed);
  if (auto it = doc.find("template"); it != doc.end()) {
    if (it->is_string()) {
      cfg.prompt_template = PromptTemplate::named(it->get<std::string>());
    } else {
      cfg.prompt_template.preamble = it->value("preamble", cfg.prompt_template.preamble);
      if (it->contains("model_prefix")) {
        cfg.prompt_template.model_prefix = it->at("model_prefix").get<std::string>();
      }
      cfg.prompt_template.query_block = it->value("query_block", cfg.prompt_template.query_block);
    }
  }
  if (auto it = doc.find("max_examples"); it != doc.end()) {
    cfg.max_examples = it->get<std::size_t>();
  }
  for (const auto& c : doc.value("corpora", json::array())) {
    cfg.corpora.push_back({parse_corpus_type(c.at("type").get<std::string>()),
                           resolve_path(base_dir, c.at("path").get<std::string>())});
  }
  for (const auto& d : doc.at("directions")) {
    cfg.directions.push_back({d.at("source").get<std::string>(), d.at("target").get<std::string>(),
                              resolve_path(base_dir, d.at("source_file").get<std::string>()),
                              resolve_path(base_dir, d.at("target_file").get<std::string>())});
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read experiment file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("experiment file " + path.string() + ": " + e.what());
  }
  return parse_experiment(doc, path.parent_path());
}

std::uint64_t request_seed(const Condition& condition, std::size_t example_index) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : condition.key() + "#" + std::to_string(example_index)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h & 0x7fffffffULL;
}

ConditionOutcome run_condition(const std::vector<PromptItem>& items, const Condition& condition,
                               const PackedContext& packed, const DecodingConfig& decoding,
                               const EndpointConfig& endpoint, const ChatBackend& backend,
                               const Tokenizer& tokenizer) {
  ConditionOutcome outcome;
  if (items.empty()) return outcome;

  struct Slot {
    std::optional<GenerationResult> result;
    std::string error;
    bool connection = false;
  };
  std::vector<Slot> slots(items.size());
  const RetryPolicy policy{endpoint.max_retries, endpoint.backoff_base};

  auto issue = [&](std::size_t i) {
    const PromptItem& item = items[i];
    ChatRequest req;
    req.system_text = item.prompt.system_text;
    req.user_text = item.prompt.user_text;
    req.temperature = decoding.temperature;
    req.max_tokens = decoding.max_output_tokens;
    req.stop = decoding.stop;
    req.seed = request_seed(condition, item.example_index);
    try {
      const ChatResponse resp = complete_with_retry(backend, req, policy);
      GenerationResult r;
      r.condition = condition;
      r.example_index = item.example_index;
      r.example_id = item.example_id;
      r.model_id = endpoint.model_id;
      r.source_text = item.source_text;
      r.reference_text = item.reference_text;
      r.output_text = resp.content;
      r.prompt_tokens = resp.prompt_tokens
                            ? TokenCount{*resp.prompt_tokens}
                            : tokenizer.count(render_single_block(item.prompt));
      if (resp.completion_tokens) {
        r.output_tokens = {*resp.completion_tokens};
        r.output_tokens_source = "usage";
      } else {
        r.output_tokens = tokenizer.count(resp.content);
        r.output_tokens_source = "tokenizer";
      }
      r.shot_tokens = packed.shot_tokens;
      r.n_shots = packed.n_shots;
      r.truncated = resp.truncated;
      r.latency_ms = resp.latency_ms;
      slots[i].result = std::move(r);
    } catch (const TransportError& e) {
      slots[i].error = e.what();
      slots[i].connection = e.kind() == TransportKind::connection;
    }
  };

  // Warm the prefix cache with one request before fanning out.
  issue(0);
  std::atomic<std::size_t> next{1};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) issue(i);
  };
  const std::size_t width =
      std::min<std::size_t>(static_cast<std::size_t>(endpoint.parallelism), items.size() - 1);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < width; ++t) threads.emplace_back(worker);
  for (auto& th : threads) th.join();

  bool all_connection = true;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].result) {
      all_connection = false;
      outcome.results.push_back(std::move(*slots[i].result));
    } else {
      all_connection = all_connection && slots[i].connection;
      outcome.failures.push_back({items[i].example_index, slots[i].error});
    }
  }
  if (all_connection) {
    throw EndpointUnavailable("endpoint unreachable after retries: " + endpoint.base_url + " (" +
                              outcome.failures.front().error + ")");
  }
  return outcome;
}

namespace {

json condition_json(const ConditionEntry& e) {
  json failures = json::array();
  for (const auto& f : e.failures) failures.push_back({{"example_index", f.example_index}, {"error", f.error}});
  json j = {{"key", e.condition.key()},
            {"corpus_type", e.condition.corpus_label()},
            {"src_lang", e.condition.source_lang},
            {"tgt_lang", e.condition.target_lang},
            {"rung", e.condition.rung.value},
            {"run_id", e.condition.run_id},
            {"status", e.status},
            {"n_results", e.n_results},
            {"n_shots", e.n_shots},
            {"shot_tokens", e.shot_tokens.value},
            {"failures", failures}};
  if (e.seed) j["seed"] = *e.seed;
  return j;
}

ConditionEntry condition_from_json(const json& j) {
  ConditionEntry e;
  const auto label = j.at("corpus_type").get<std::string>();
  if (label != kZeroShotLabel) e.condition.corpus_type = parse_corpus_type(label);
  e.condition.source_lang = j.at("src_lang").get<std::string>();
  e.condition.target_lang = j.at("tgt_lang").get<std::string>();
  e.condition.rung = {j.at("rung").get<std::uint64_t>()};
  e.condition.run_id = j.at("run_id").get<int>();
  e.status = j.at("status").get<std::string>();
  e.n_results = j.value("n_results", std::size_t{0});
  e.n_shots = j.value("n_shots", std::size_t{0});
  e.shot_tokens = {j.value("shot_tokens", std::uint64_t{0})};
  if (j.contains("seed")) e.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& f : j.value("failures", json::array())) {
    e.failures.push_back({f.at("example_index").get<std::size_t>(), f.at("error").get<std::string>()});
  }
  return e;
}

void write_manifest(const fs::path& dir, const json& header,
                    const std::vector<ConditionEntry>& conditions) {
  json doc = header;
  doc["conditions"] = json::array();
  for (const auto& c : conditions) doc["conditions"].push_back(condition_json(c));
  const fs::path tmp = dir / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, dir / kManifestFile);
}

std::uint64_t run_permutation_seed(std::uint64_t base, int run_id) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(run_id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

json sweep_header(const ExperimentConfig& x, const Tokenizer& tokenizer) {
  json tmpl = {{"preamble", x.prompt_template.preamble}, {"query_block", x.prompt_template.query_block}};
  if (x.prompt_template.model_prefix) tmpl["model_prefix"] = *x.prompt_template.model_prefix;
  return {{"format", 1},
          {"model_id", x.endpoint.model_id},
          {"tokenizer", tokenizer.describe()},
          {"selection_mode", to_string(x.mode)},
          {"seed", x.seed},
          {"template", tmpl},
          {"message_split",
           "system: optional model prefix + preamble; user: shots, blank line, query block"},
          {"budget_charges", "formatted shots including separators; preamble and query excluded"},
          {"decoding",
           {{"temperature", x.decoding.temperature},
            {"max_output_tokens", x.decoding.max_output_tokens},
            {"stop", x.decoding.stop}}}};
}

}  // namespace

RunStore load_store(const fs::path& dir) {
  RunStore store;
  const fs::path manifest = dir / kManifestFile;
  if (!fs::exists(manifest)) return store;
  std::ifstream in(manifest);
  json doc = json::parse(in);
  for (const auto& c : doc.value("conditions", json::array())) {
    store.conditions.push_back(condition_from_json(c));
  }
  doc.erase("conditions");
  store.header = std::move(doc);

  std::set<std::string> keys;
  for (const auto& c : store.conditions) keys.insert(c.condition.key());
  const fs::path results = dir / kResultsFile;
  if (fs::exists(results)) {
    for (const auto& line : read_lines(results)) {
      if (line.empty()) continue;
      GenerationResult r;
      try {
        r = generation_result_from_json(line);
      } catch (const std::exception&) {
        continue;  // torn final line from an interrupted append
      }
      if (keys.count(r.condition.key())) store.results.push_back(std::move(r));
    }
  }
  return store;
}

SweepStats run_sweep(const ExperimentConfig& x, const fs::path& out_dir) {
  const HttpChatBackend backend(x.endpoint);
  return run_sweep(x, backend, out_dir);
}

SweepStats run_sweep(const ExperimentConfig& x, const ChatBackend& backend, const fs::path& out_dir) {
  x.validate();
  SweepStats stats;
  const TokenizerPtr tokenizer = load_tokenizer(x.tokenizer);
  fs::create_directories(out_dir);
  const json header = sweep_header(x, *tokenizer);

  RunStore store = load_store(out_dir);
  if (!store.header.is_null()) {
    for (const char* field : {"model_id", "tokenizer", "selection_mode", "seed", "template"}) {
      if (store.header.value(field, json()) != header.at(field)) {
        throw std::runtime_error(std::string("existing store in ") + out_dir.string() +
                                 " was produced with a different " + field);
      }
    }
  }
  std::vector<ConditionEntry> done;
  std::set<std::string> done_keys;
  for (auto& c : store.conditions) {
    if (c.status != "complete") continue;
    done_keys.insert(c.condition.key());
    done.push_back(std::move(c));
  }
  {
    // Rewrite the results file with rows of completed conditions only.
    std::ofstream out(out_dir / kResultsFile, std::ios::trunc);
    for (const auto& r : store.results) {
      if (done_keys.count(r.condition.key())) out << to_json_line(r) << '\n';
    }
  }
  write_manifest(out_dir, header, done);

  struct LoadedCorpus {
    CorpusType type;
    std::vector<std::string> shots;
  };
  std::vector<LoadedCorpus> corpora;
  for (const auto& c : x.corpora) {
    const auto schema = schema_of(c.type);
    corpora.push_back({c.type, format_shots(read_corpus(c.path, schema, x.languages), schema)});
  }

  struct LoadedDirection {
    const DirectionSource* source;
    std::vector<EvalExample> examples;
  };
  std::vector<LoadedDirection> directions;
  std::size_t total_examples = 0;
  for (const auto& d : x.directions) {
    auto examples = align_eval_set(d.source_file, d.target_file, x.languages.resolve(d.source_lang),
                                   x.languages.resolve(d.target_lang));
    if (x.max_examples && examples.size() > *x.max_examples) examples.resize(*x.max_examples);
    total_examples += examples.size();
    directions.push_back({&d, std::move(examples)});
  }
  if (total_examples == 0) {
    stats.warnings.push_back("no evaluation examples; nothing to run");
    return stats;
  }

  std::ofstream results_out(out_dir / kResultsFile, std::ios::app);
  auto run_one = [&](const Condition& cond, const PackedContext& packed,
                     const std::vector<EvalExample>& examples) {
    if (done_keys.count(cond.key())) {
      ++stats.conditions_skipped;
      return;
    }
    std::vector<PromptItem> items;
    items.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      PromptItem item;
      item.prompt = assemble_prompt(packed, examples[i], x.prompt_template);
      item.example_index = i;
      item.example_id = cond.source_lang + ">" + cond.target_lang + "#" + std::to_string(i);
      item.source_text = examples[i].source_text;
      item.reference_text = examples[i].reference_text;
      items.push_back(std::move(item));
    }
    ConditionEntry entry;
    entry.condition = cond;
    entry.n_shots = packed.n_shots;
    entry.shot_tokens = packed.shot_tokens;
    entry.seed = packed.seed;
    try {
      ConditionOutcome outcome = run_condition(items, cond, packed, x.decoding, x.endpoint, backend,
                                               *tokenizer);
      for (const auto& r : outcome.results) results_out << to_json_line(r) << '\n';
      results_out.flush();
      entry.status = "complete";
      entry.n_results = outcome.results.size();
      entry.failures = std::move(outcome.failures);
      stats.results_written += outcome.results.size();
    } catch (const EndpointUnavailable& e) {
      entry.status = "failed";
      for (const auto& item : items) entry.failures.push_back({item.example_index, e.what()});
      stats.warnings.push_back(cond.key() + ": " + e.what());
    }
    stats.failures += entry.failures.size();
    ++stats.conditions_run;
    done.push_back(std::move(entry));
    write_manifest(out_dir, header, done);
  };

  std::set<std::size_t> zero_shot_done;
  for (const auto& corpus : corpora) {
    for (std::size_t d = 0; d < directions.size(); ++d) {
      const auto& dir = directions[d];
      if (dir.examples.empty()) continue;
      for (const TokenCount rung : x.ladder.rungs) {
        if (rung.value == 0) {
          if (!zero_shot_done.insert(d).second) continue;
          Condition cond{std::nullopt, dir.source->source_lang, dir.source->target_lang, rung, 0};
          run_one(cond, PackedContext{}, dir.examples);
          continue;
        }
        std::optional<PackedContext> first_k;
        for (int run = 0; run < x.runs_for(rung); ++run) {
          Condition cond{corpus.type, dir.source->source_lang, dir.source->target_lang, rung, run};
          if (done_keys.count(cond.key())) {
            ++stats.conditions_skipped;
            continue;
          }
          if (x.mode == SelectionMode::first_k) {
            if (!first_k) first_k = pack_first_k(corpus.shots, rung, *tokenizer);
            run_one(cond, *first_k, dir.examples);
          } else {
            run_one(cond, pack_random_k(corpus.shots, rung, *tokenizer, run_permutation_seed(x.seed, run)),
                    dir.examples);
          }
        }
      }
    }
  }
  if (corpora.empty()) {
    for (std::size_t d = 0; d < directions.size(); ++d) {
      const auto& dir = directions[d];
      if (dir.examples.empty() || x.ladder.rungs.front().value != 0) continue;
      Condition cond{std::nullopt, dir.source->source_lang, dir.source->target_lang, {0}, 0};
      run_one(cond, PackedContext{}, dir.examples);
    }
  }
  return stats;
}

}  // namespace manyshot
