// Acceptance checks: one PASS/FAIL line per criterion, tolerances and time limits fixed below.
#include <fmt/core.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "manyshot/analysis.hpp"
#include "manyshot/inference.hpp"
#include "manyshot/metrics.hpp"
#include "manyshot/mock_endpoint.hpp"
#include "manyshot/prompt.hpp"
#include "manyshot/refinery.hpp"
#include "support/sweep_fixture.hpp"
#include "support/temp_dir.hpp"

using namespace manyshot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kChrfTolerance = 1e-6;
constexpr double kTTolerance = 1e-9;
constexpr double kPTolerance = 1e-6;
constexpr double kChrfSeconds = 5;
constexpr double kPackingSeconds = 30;
constexpr double kRefinerySeconds = 120;
constexpr double kSweepSeconds = 180;
constexpr int kPackingCases = 1000;
constexpr int kCoveragePools = 100;
constexpr double kCoverageShare = 0.95;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Check = std::function<Outcome()>;

// Collects failures inside a criterion; the first few messages are kept.
struct Failures {
  std::size_t count = 0;
  std::string first;
  void add(const std::string& msg) {
    if (count++ == 0) first = msg;
  }
  Outcome outcome(std::string ok_detail) const {
    if (count == 0) return {true, std::move(ok_detail)};
    return {false, fmt::format("{} failure(s); first: {}", count, first)};
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> read_jsonl(const std::string& name) {
  std::vector<std::string> out;
  std::istringstream in(testing::slurp(testing::fixture(name)));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// --- chrF++ ---------------------------------------------------------------

Outcome chrf_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Failures f;
  double worst = 0;
  std::size_t n = 0;
  for (const auto& line : read_jsonl("chrf_golden.jsonl")) {
    const auto j = json::parse(line);
    const double expected = std::stod(j.at("chrf_pp").get<std::string>());
    const double got = chrf_pp(j.at("hyp").get<std::string>(), j.at("ref").get<std::string>()).score;
    worst = std::max(worst, std::abs(got - expected));
    ++n;
    const auto kind = j.at("kind").get<std::string>();
    if (std::abs(got - expected) > kChrfTolerance) f.add(fmt::format("pair {} off by {:.3g}", n, got - expected));
    if (kind == "identity" && got != 1.0) f.add(fmt::format("identity pair {} scored {:.17g}", n, got));
    if (kind == "disjoint" && got != 0.0) f.add(fmt::format("disjoint pair {} scored {:.17g}", n, got));
  }
  if (n != 50) f.add(fmt::format("fixture has {} pairs", n));
  const double secs = seconds_since(t0);
  if (secs > kChrfSeconds) f.add(fmt::format("took {:.2f}s", secs));
  return f.outcome(fmt::format("{} pairs, max |diff| {:.2e}, {:.2f}s", n, worst, secs));
}

// --- summary arithmetic ---------------------------------------------------

Outcome summary_rows() {
  Failures f;
  auto row = [&](const std::vector<std::pair<TokenCount, double>>& means, const std::vector<std::string>& want,
                 const char* name) {
    const auto got = summary_cells(summarize(means));
    if (got != want) {
      f.add(fmt::format("{}: got {} {} {} {} {}", name, got[0], got[1], got[2], got[3], got[4]));
    }
  };
  row({{{0}, 0.399}, {{131072}, 0.41}, {{262144}, 0.426}, {{524288}, 0.418}},
      {"0.399", "0.426", "262K", "+0.027", "+6.8%"}, "Qwen unsupervised JV->EN");
  row({{{0}, 0.464}, {{8192}, 0.49}, {{16384}, 0.507}, {{32768}, 0.5}},
      {"0.464", "0.507", "16K", "+0.043", "+9.3%"}, "Nemotron supervised(ID) SU->EN");
  return f.outcome("0.399 0.426 262K +0.027 +6.8% / 0.464 0.507 16K +0.043 +9.3%");
}

// --- packing --------------------------------------------------------------

std::string join_shots(const std::vector<std::string>& shots, const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) out += "\n\n";
    out += shots[idx[i]];
  }
  return out;
}

Outcome packing_properties() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto tok = load_tokenizer(TokenizerSpec::approximate());
  std::mt19937_64 rng(77);
  Failures f;
  for (int c = 0; c < kPackingCases; ++c) {
    const std::size_t n = 1 + rng() % 400;
    std::vector<std::string> shots;
    for (std::size_t i = 0; i < n; ++i) {
      shots.push_back(testing::pseudo_sentence(rng, testing::jav_vocab(), 1 + static_cast<int>(rng() % 60)));
    }
    if (!pack_first_k(shots, {0}, *tok).shots_text.empty() || pack_first_k(shots, {0}, *tok).n_shots != 0) {
      f.add(fmt::format("case {}: rung 0 produced shots", c));
    }
    std::vector<std::size_t> previous;
    for (int e = 7; e <= 14; ++e) {
      const TokenCount rung{1u << e};
      const auto p = pack_first_k(shots, rung, *tok);
      if (p.shot_tokens > rung) f.add(fmt::format("case {} rung {}: {} tokens", c, rung.value, p.shot_tokens.value));
      if (tok->count(p.shots_text) != p.shot_tokens) f.add(fmt::format("case {}: recorded count differs", c));
      if (p.shots_text != join_shots(shots, p.shot_indices)) f.add(fmt::format("case {}: text mismatch", c));
      if (p.shot_indices.size() < previous.size() ||
          !std::equal(previous.begin(), previous.end(), p.shot_indices.begin())) {
        f.add(fmt::format("case {} rung {}: not an extension of the previous rung", c, rung.value));
      }
      previous = p.shot_indices;
    }
    const std::uint64_t seed = rng();
    const TokenCount rung{1u << (7 + rng() % 8)};
    const auto r1 = pack_random_k(shots, rung, *tok, seed);
    const auto r2 = pack_random_k(shots, rung, *tok, seed);
    if (r1.shots_text != r2.shots_text || r1.shot_indices != r2.shot_indices) {
      f.add(fmt::format("case {}: random-k differs under seed {}", c, seed));
    }
    if (r1.shot_tokens > rung) f.add(fmt::format("case {}: random-k over budget", c));
    if (!pack_random_k(shots, {0}, *tok, seed).shot_indices.empty()) f.add("random-k rung 0 not empty");
  }
  const double secs = seconds_since(t0);
  if (secs > kPackingSeconds) f.add(fmt::format("took {:.1f}s", secs));
  return f.outcome(fmt::format("{} cases, rungs 2^7..2^14, {:.1f}s", kPackingCases, secs));
}

// --- filter and sampler ---------------------------------------------------

// Syllable-built vocabulary so pools have a long tail of distinct words.
std::vector<std::string> synthetic_vocab(std::size_t n, std::uint64_t seed) {
  static const char* syll[] = {"ka", "la", "ma", "na", "pa", "sa", "ta", "wa", "ja", "ra", "ngu", "ke",
                               "li", "mo", "nu", "pe", "si", "to", "we", "yo", "dha", "tha", "ba", "ga"};
  std::mt19937_64 rng(seed);
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w;
    const int k = 2 + static_cast<int>(rng() % 3);
    for (int i = 0; i < k; ++i) w += syll[rng() % (sizeof syll / sizeof *syll)];
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

std::string zipf_sentence(std::mt19937_64& rng, const std::vector<std::string>& vocab, int words) {
  std::string s;
  for (int i = 0; i < words; ++i) {
    if (i) s.push_back(' ');
    // Squaring a uniform draw skews picks toward the head of the vocabulary.
    const double u = std::uniform_real_distribution<double>(0, 1)(rng);
    s += vocab[static_cast<std::size_t>(u * u * static_cast<double>(vocab.size()))];
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + ".";
}

std::vector<std::string> make_pool(std::mt19937_64& rng, const std::vector<std::string>& vocab,
                                   std::size_t n, int min_words, int max_words) {
  std::vector<std::string> pool;
  pool.reserve(n);
  while (pool.size() < n) {
    const int w = min_words + static_cast<int>(rng() % static_cast<unsigned>(max_words - min_words + 1));
    if (pool.size() > 10 && rng() % 10 == 0) {
      // Near duplicate: an earlier sentence or a word-aligned slice of one.
      const auto& base = pool[rng() % pool.size()];
      if (rng() % 2 == 0) {
        pool.push_back(base);
      } else {
        const auto cut = base.find(' ', base.size() / 2);
        pool.push_back(cut == std::string::npos ? base : base.substr(0, cut) + ".");
      }
      continue;
    }
    pool.push_back(zipf_sentence(rng, vocab, w));
  }
  return pool;
}

std::size_t distinct_words(const std::vector<std::string>& sentences) {
  std::unordered_set<std::string> words;
  for (const auto& s : sentences) {
    for (auto& w : sampler_words(s)) words.insert(std::move(w));
  }
  return words.size();
}

// Independent restatement of the simple filter predicates.
std::optional<std::string> independent_filter_check(const std::string& s, const FilterConfig& cfg) {
  std::size_t words = 0, digits = 0, nonspace = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    const bool ws = std::isspace(c) != 0;
    if (!ws && !in_word) ++words;
    in_word = !ws;
    if (!ws) ++nonspace;
    if (std::isdigit(c)) ++digits;
  }
  if (words < static_cast<std::size_t>(cfg.min_words)) return "too few words";
  if (words > static_cast<std::size_t>(cfg.max_words)) return "too many words";
  for (const char* marker : {"http://", "https://", "www.", "@", "<", ">"}) {
    if (s.find(marker) != std::string::npos) return std::string("contains ") + marker;
  }
  if (nonspace && static_cast<double>(digits) / static_cast<double>(nonspace) > cfg.max_digit_ratio) {
    return "digit ratio";
  }
  const char last = s.back();
  if (last != '.' && last != '!' && last != '?' && last != '"' && static_cast<unsigned char>(last) < 0x80) {
    return "terminal punctuation";
  }
  if (std::islower(static_cast<unsigned char>(s.front()))) return "lowercase start";
  return std::nullopt;
}

std::vector<std::string> noisy_corpus(std::mt19937_64& rng, const std::vector<std::string>& vocab, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = zipf_sentence(rng, vocab, 2 + static_cast<int>(rng() % 70));
    switch (rng() % 9) {
      case 0: s = "Bukak https://example.org/" + std::to_string(i) + " " + s; break;
      case 1: s += " 123456789 987654321."; break;
      case 2: s.pop_back(); break;
      case 3: s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0]))); break;
      case 4: s = "Kode x = " + std::to_string(i) + "; " + s; break;
      case 5: s = "SIJI LORO TELU PAPAT LIMA " + s; break;
      default: break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

Outcome filter_and_sampler() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto tok = load_tokenizer(TokenizerSpec::approximate());
  Failures f;
  std::mt19937_64 rng(31337);
  const auto vocab = synthetic_vocab(60000, 3);

  // Filter: survivors re-pass every predicate.
  const FilterConfig fcfg;
  const auto noisy = noisy_corpus(rng, vocab, 20000);
  const auto filtered = filter_corpus(noisy, fcfg);
  std::size_t rejected = 0;
  for (const auto& [code, n] : filtered.rejections) rejected += n;
  if (filtered.kept.size() + rejected != noisy.size()) f.add("kept + rejected != input");
  for (const auto& s : filtered.kept) {
    if (auto r = passes_filter(s, fcfg)) f.add("survivor fails " + std::string(to_string(r->code)) + ": " + s);
    if (auto r = independent_filter_check(s, fcfg)) f.add("survivor fails independent check (" + *r + "): " + s);
  }

  // Sampler on a pool of at least 1M tokens with the default budget.
  std::vector<std::string> pool;
  std::uint64_t pool_tokens = 0;
  while (pool_tokens < 1'000'000) {
    auto chunk = make_pool(rng, vocab, 2000, 18, 34);
    for (auto& s : chunk) {
      pool_tokens += tok->count(s).value;
      pool.push_back(std::move(s));
    }
  }
  const SamplerConfig scfg;
  const auto big = sample_diverse(pool, scfg, *tok);
  std::uint64_t recount = 0;
  for (const auto& s : big.selected) recount += tok->count(s).value;
  if (recount > scfg.token_budget.value || big.vocabulary.total_tokens.value != recount) {
    f.add(fmt::format("selection holds {} tokens (budget {})", recount, scfg.token_budget.value));
  }

  // Quadratic rescan for containment between any two selected sentences.
  std::vector<std::string> norm;
  norm.reserve(big.selected.size());
  for (const auto& s : big.selected) norm.push_back(normalize_for_dedup(s));
  std::atomic<std::size_t> violations{0}, next_row{0};
  auto scan = [&] {
    for (std::size_t i = next_row.fetch_add(1); i < norm.size(); i = next_row.fetch_add(1)) {
      for (std::size_t j = 0; j < norm.size(); ++j) {
        if (i == j || norm[i].size() > norm[j].size()) continue;
        if (norm[j].find(norm[i]) != std::string::npos) ++violations;
      }
    }
  };
  std::vector<std::thread> workers;
  const unsigned width = std::max(1u, std::thread::hardware_concurrency());
  for (unsigned t = 0; t < width; ++t) workers.emplace_back(scan);
  for (auto& t : workers) t.join();
  if (violations) f.add(fmt::format("{} containment pairs among selected sentences", violations.load()));

  // Coverage against a first-k baseline over randomized pools.
  int wins = 0;
  for (int p = 0; p < kCoveragePools; ++p) {
    std::mt19937_64 prng(1000 + p);
    const auto small = make_pool(prng, vocab, 1500, 5, 30);
    SamplerConfig cfg;
    cfg.token_budget = {8000};
    const auto diverse = sample_diverse(small, cfg, *tok);
    std::vector<std::string> baseline;
    std::uint64_t used = 0;
    for (const auto& s : small) {
      const auto t = tok->count(s).value;
      if (used + t > cfg.token_budget.value) break;
      used += t;
      baseline.push_back(s);
    }
    wins += distinct_words(diverse.selected) >= distinct_words(baseline);
  }
  if (wins < kCoverageShare * kCoveragePools) f.add(fmt::format("coverage >= first-k in only {}/{} pools", wins, kCoveragePools));

  const double secs = seconds_since(t0);
  if (secs > kRefinerySeconds) f.add(fmt::format("took {:.1f}s", secs));
  return f.outcome(fmt::format("{} survivors of {}; pool {} tokens -> {} sentences / {} tokens, "
                               "0 containment pairs; coverage >= first-k in {}/{}; {:.1f}s",
                               filtered.kept.size(), noisy.size(), pool_tokens, big.selected.size(),
                               recount, wins, kCoveragePools, secs));
}

// --- paired t-test ----------------------------------------------------------

double closed_form_t(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d;
    sum_sq += d * d;
  }
  const double mean = sum / n;
  const double var = (sum_sq - n * mean * mean) / (n - 1);
  return mean / std::sqrt(var / n);
}

// Two-tailed tail mass of Student's t by composite Simpson on x = |t| + u / (1 - u).
double integrated_p(double t, double dof) {
  const double c = std::exp(std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2)) / std::sqrt(dof * M_PI);
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double x = std::abs(t) + u / (1 - u);
    return c * std::pow(1 + x * x / dof, -(dof + 1) / 2) / ((1 - u) * (1 - u));
  };
  const int n = 400000;
  const double h = 1.0 / n;
  double s = g(0) + g(1);
  for (int i = 1; i < n; ++i) s += g(i * h) * (i % 2 ? 4 : 2);
  return 2 * s * h / 3;
}

Outcome ttest() {
  Failures f;
  double worst_t = 0, worst_p = 0;
  std::size_t cases = 0;
  for (const auto& line : read_jsonl("ttest_golden.jsonl")) {
    const auto j = json::parse(line);
    const auto a = j.at("a").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    const auto got = paired_t_test(a, b);
    const double t = closed_form_t(a, b);
    const double p = integrated_p(t, static_cast<double>(a.size() - 1));
    const double p_ref = std::stod(j.at("p").get<std::string>());
    const double dt = std::abs(got.t - t) / std::max(1.0, std::abs(t));
    worst_t = std::max(worst_t, dt);
    worst_p = std::max({worst_p, std::abs(got.p - p), std::abs(got.p - p_ref)});
    if (dt > kTTolerance) f.add(fmt::format("case {}: t {} vs {}", cases, got.t, t));
    if (std::abs(got.p - p) > kPTolerance) f.add(fmt::format("case {}: p {} vs integrated {}", cases, got.p, p));
    if (std::abs(got.p - p_ref) > kPTolerance) f.add(fmt::format("case {}: p {} vs reference {}", cases, got.p, p_ref));
    ++cases;
  }
  if (cases != 20) f.add(fmt::format("{} fixtures", cases));
  try {
    paired_t_test({0.4, 0.5, 0.6}, {0.4, 0.5, 0.6});
    f.add("a == b did not raise");
  } catch (const MetricsError& e) {
    if (e.code() != MetricsErrc::zero_variance) f.add("a == b raised the wrong error");
  }
  return f.outcome(fmt::format("{} fixtures, max rel |dt| {:.1e}, max |dp| {:.1e}, a=b -> ZeroVariance", cases,
                               worst_t, worst_p));
}

// --- end-to-end sweep -------------------------------------------------------

Outcome dry_run() {
  const auto t0 = std::chrono::steady_clock::now();
  Failures f;
  testing::TempDir dir;
  MockChatServer server(echo_with_noise);
  auto doc = testing::make_sweep_tree(dir, 20, {"unsupervised", "supervised_en"}, 600);
  doc["endpoint"]["base_url"] = server.base_url();
  doc["ladder"] = "7..12";
  doc["runs"] = 5;
  doc["mode"] = "random_k";
  const auto x = parse_experiment(doc, dir.path());
  const auto runs = dir / "runs";

  const auto stats = run_sweep(x, runs);
  const std::size_t conditions = 2 * (1 + 2 * 6 * 5);
  const std::uint64_t first_requests = server.request_count();
  if (stats.conditions_run != conditions) f.add(fmt::format("{} conditions run, expected {}", stats.conditions_run, conditions));
  if (first_requests != conditions * 20) f.add(fmt::format("{} requests, expected {}", first_requests, conditions * 20));

  const auto store = load_store(runs);
  std::map<std::string, std::set<std::size_t>> have;
  std::size_t duplicates = 0;
  for (const auto& r : store.results) duplicates += !have[r.condition.key()].insert(r.example_index).second;
  std::size_t incomplete = 0;
  for (const auto& c : store.conditions) {
    std::set<std::size_t> failed;
    for (const auto& e : c.failures) failed.insert(e.example_index);
    for (std::size_t i = 0; i < 20; ++i) incomplete += have[c.condition.key()].count(i) + failed.count(i) != 1;
  }
  if (duplicates) f.add(fmt::format("{} duplicate results", duplicates));
  if (incomplete) f.add(fmt::format("{} (condition, example) cells without exactly one outcome", incomplete));
  if (store.conditions.size() != conditions) f.add("manifest condition count differs");

  const auto resumed = run_sweep(x, runs);
  const std::uint64_t extra = server.request_count() - first_requests;
  if (extra != 0 || resumed.conditions_run != 0) f.add(fmt::format("resume issued {} requests", extra));

  const auto records = build_run_records(load_store(runs).results);
  const auto entries = summarize_all(aggregate_runs(records));
  const auto tables = dir / "tables";
  fs::create_directories(tables);
  std::ofstream(tables / "summary_chrf_pp.csv") << summary_csv(entries);
  std::ofstream(tables / "summary_chrf_pp.txt") << summary_text_table(entries);
  const auto curves = emit_curves(records, kChrfMetric, dir / "curves");
  if (entries.size() != 4) f.add(fmt::format("{} summary rows, expected 4", entries.size()));
  // combined + 2 per-direction curves + output tokens
  if (curves.size() != 4) f.add(fmt::format("{} curve files", curves.size()));
  for (const auto& p : curves) {
    if (!fs::exists(p) || fs::file_size(p) == 0) f.add("missing " + p.string());
  }

  const double secs = seconds_since(t0);
  if (secs > kSweepSeconds) f.add(fmt::format("took {:.1f}s", secs));
  return f.outcome(fmt::format("{} conditions, {} requests, resume +{} requests, {} summary rows, {} curve files, "
                               "{:.1f}s",
                               store.conditions.size(), first_requests, extra, entries.size(), curves.size(), secs));
}

// --- prompt layout ----------------------------------------------------------

Outcome prompt_layout() {
  const auto langs = LanguageTable::defaults();
  const ParallelRecord shot{
      langs.resolve("eng_Latn"), langs.resolve("jav_Latn"),
      "Guests and other residents included opera singer Geraldine Farrar, baritone Antonio Scotti, "
      "film director and producer D. W. Griffith, novelist F. Scott Fitzgerald, as well as many "
      "politicians and diplomats.",
      "Tamu lan warga liyane kalebu penyanyi opera Geraldine Farrar, bariton Antonio Scotti, "
      "sutradara lan produser film D. W. Griffith, novelis F. Scott Fitzgerald, uga akeh politisi "
      "lan diplomat."};
  const auto tok = load_tokenizer(TokenizerSpec::approximate());
  const auto packed = pack_first_k(format_shots({shot}, CorpusSchema::parallel), {1024}, *tok);
  EvalExample ex{langs.resolve("eng_Latn"), langs.resolve("jav_Latn"),
                 "Dr. Ehud Ur, professor of medicine at Dalhousie University in Halifax, Nova Scotia and "
                 "chair of the clinical and scientific division of the Canadian Diabetes Association "
                 "cautioned that the research is still in its early days.",
                 ""};
  const auto got = render_single_block(assemble_prompt(packed, ex, PromptTemplate{}));
  const auto want = testing::slurp(testing::fixture("prompt_one_shot_en_jv.txt"));
  if (got == want) return {true, fmt::format("{} bytes identical", got.size())};
  std::size_t i = 0;
  while (i < got.size() && i < want.size() && got[i] == want[i]) ++i;
  return {false, fmt::format("first difference at byte {} (got {} bytes, want {})", i, got.size(), want.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Check>> criteria = {
      {"chrf_oracle_equivalence", chrf_oracle},
      {"summary_arithmetic_golden", summary_rows},
      {"budget_packing_properties", packing_properties},
      {"filter_sampler_suite", filter_and_sampler},
      {"paired_ttest_oracle", ttest},
      {"end_to_end_mock_dry_run", dry_run},
      {"prompt_byte_layout_golden", prompt_layout},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    fmt::print("{} {} ({})\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
