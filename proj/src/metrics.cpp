#include "manyshot/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "manyshot/unicode.hpp"

namespace manyshot {

std::string_view to_string(Aggregation aggregation) {
  return aggregation == Aggregation::segment_macro ? "segment_macro" : "corpus_micro";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "segment_macro") return Aggregation::segment_macro;
  if (name == "corpus_micro") return Aggregation::corpus_micro;
  throw std::invalid_argument("unknown aggregation: " + std::string(name));
}

void MetricConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (max_char_n < 1) throw std::invalid_argument("max_char_n must be >= 1");
  if (max_word_n < 0) throw std::invalid_argument("max_word_n must be >= 0");
}

NgramCounts char_ngrams(std::string_view text, int n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be >= 1");
  // Byte offsets of the kept code points, so n-grams are substrings of `packed`.
  std::string packed;
  std::vector<std::size_t> starts;
  packed.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    const char32_t cp = unicode::decode_at(text, i, len);
    if (!unicode::is_space(cp)) {
      starts.push_back(packed.size());
      unicode::append_utf8(packed, cp);
    }
    i += len;
  }
  NgramCounts counts;
  const auto order = static_cast<std::size_t>(n);
  if (starts.size() < order) return counts;
  starts.push_back(packed.size());
  for (std::size_t i = 0; i + order < starts.size(); ++i) {
    ++counts[packed.substr(starts[i], starts[i + order] - starts[i])];
  }
  return counts;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  for (std::string_view piece : unicode::split_whitespace(text)) {
    const std::u32string cps = unicode::decode(piece);
    std::size_t lead = 0;
    while (lead < cps.size() && !unicode::is_alnum(cps[lead])) ++lead;
    if (lead == cps.size()) {
      tokens.emplace_back(piece);
      continue;
    }
    std::size_t tail = cps.size();
    while (tail > lead && !unicode::is_alnum(cps[tail - 1])) --tail;
    if (lead > 0) tokens.push_back(unicode::encode(cps.substr(0, lead)));
    tokens.push_back(unicode::encode(cps.substr(lead, tail - lead)));
    if (tail < cps.size()) tokens.push_back(unicode::encode(cps.substr(tail)));
  }
  return tokens;
}

NgramCounts word_ngrams(std::string_view text, int n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be >= 1");
  const auto tokens = word_tokens(text);
  NgramCounts counts;
  const auto order = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < order; ++k) {
      key.push_back(' ');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

namespace {

OrderStats match(const NgramCounts& hyp, const NgramCounts& ref) {
  OrderStats s;
  for (const auto& [gram, c] : hyp) s.hyp_total += c;
  for (const auto& [gram, c] : ref) s.ref_total += c;
  for (const auto& [gram, c] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) s.matches += std::min(c, it->second);
  }
  return s;
}

void finish(OrderStats& s, double beta2) {
  s.precision = s.hyp_total == 0 ? 0.0 : static_cast<double>(s.matches) / s.hyp_total;
  s.recall = s.ref_total == 0 ? 0.0 : static_cast<double>(s.matches) / s.ref_total;
  const double denom = beta2 * s.precision + s.recall;
  s.f = denom == 0.0 ? 0.0 : (1.0 + beta2) * s.precision * s.recall / denom;
}

}  // namespace

double chrf_from_counts(std::vector<OrderStats>& char_orders, std::vector<OrderStats>& word_orders,
                        double beta) {
  const double beta2 = beta * beta;
  double sum = 0.0;
  int effective = 0;
  for (auto* orders : {&char_orders, &word_orders}) {
    for (auto& s : *orders) {
      finish(s, beta2);
      if (s.hyp_total + s.ref_total > 0) {
        sum += s.f;
        ++effective;
      }
    }
  }
  return effective == 0 ? 0.0 : sum / effective;
}

ChrFBreakdown chrf_pp(std::string_view hypothesis, std::string_view reference,
                      const MetricConfig& cfg) {
  cfg.validate();
  ChrFBreakdown out;
  for (int n = 1; n <= cfg.max_char_n; ++n) {
    out.char_orders.push_back(match(char_ngrams(hypothesis, n), char_ngrams(reference, n)));
  }
  for (int n = 1; n <= cfg.max_word_n; ++n) {
    out.word_orders.push_back(match(word_ngrams(hypothesis, n), word_ngrams(reference, n)));
  }
  out.score = chrf_from_counts(out.char_orders, out.word_orders, cfg.beta);
  return out;
}

double corpus_chrf_pp(const std::vector<std::pair<std::string, std::string>>& pairs,
                      const MetricConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw MetricsError(MetricsErrc::empty_input, "no segments to score");
  if (cfg.aggregation == Aggregation::segment_macro) {
    double sum = 0.0;
    for (const auto& [hyp, ref] : pairs) sum += chrf_pp(hyp, ref, cfg).score;
    return sum / static_cast<double>(pairs.size());
  }
  std::vector<OrderStats> chars(static_cast<std::size_t>(cfg.max_char_n));
  std::vector<OrderStats> words(static_cast<std::size_t>(cfg.max_word_n));
  for (const auto& [hyp, ref] : pairs) {
    const ChrFBreakdown seg = chrf_pp(hyp, ref, cfg);
    for (std::size_t i = 0; i < chars.size(); ++i) {
      chars[i].hyp_total += seg.char_orders[i].hyp_total;
      chars[i].ref_total += seg.char_orders[i].ref_total;
      chars[i].matches += seg.char_orders[i].matches;
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
      words[i].hyp_total += seg.word_orders[i].hyp_total;
      words[i].ref_total += seg.word_orders[i].ref_total;
      words[i].matches += seg.word_orders[i].matches;
    }
  }
  return chrf_from_counts(chars, words, cfg.beta);
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kTolerance = 1e-12;
  constexpr int kMaxTerms = 10000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) <= kTolerance) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_two_tailed(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return std::clamp(regularized_incomplete_beta(x, dof / 2.0, 0.5), 0.0, 1.0);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() && b.empty()) throw MetricsError(MetricsErrc::empty_input, "paired t-test on empty samples");
  if (a.size() != b.size()) {
    throw MetricsError(MetricsErrc::length_mismatch,
                       "paired samples differ in length: " + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
  }
  const std::size_t n = a.size();
  if (n < 2) throw MetricsError(MetricsErrc::too_few_pairs, "paired t-test needs n >= 2");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];

  double scale = 0.0;
  for (double v : d) scale = std::max(scale, std::fabs(v));
  const double tol = 1e-12 * std::max(1.0, scale);
  if (std::all_of(d.begin(), d.end(), [&](double v) { return std::fabs(v - d[0]) <= tol; })) {
    throw MetricsError(MetricsErrc::zero_variance, "all paired differences are equal");
  }

  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult r;
  r.n = n;
  r.dof = n - 1;
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_tailed(r.t, static_cast<double>(r.dof));
  return r;
}

std::map<std::pair<std::uint64_t, std::string>, double> output_length_stats(
    const std::vector<GenerationResult>& results) {
  std::map<std::pair<std::uint64_t, std::string>, std::pair<double, std::size_t>> acc;
  for (const auto& r : results) {
    auto& [sum, count] = acc[{r.condition.rung.value, r.condition.corpus_label()}];
    sum += static_cast<double>(r.output_tokens.value);
    ++count;
  }
  std::map<std::pair<std::uint64_t, std::string>, double> means;
  for (const auto& [key, v] : acc) means[key] = v.first / static_cast<double>(v.second);
  return means;
}

}  // namespace manyshot
