#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "manyshot/records.hpp"

namespace manyshot {

enum class Aggregation { segment_macro, corpus_micro };

std::string_view to_string(Aggregation aggregation);
Aggregation parse_aggregation(std::string_view name);

struct MetricConfig {
  double beta = 2.0;
  int max_char_n = 6;
  int max_word_n = 2;
  Aggregation aggregation = Aggregation::segment_macro;

  void validate() const;
};

// Keys are UTF-8; word n-grams join their tokens with a single space.
using NgramCounts = std::unordered_map<std::string, std::uint32_t>;

// Code-point n-grams of `text` with every whitespace character removed.
NgramCounts char_ngrams(std::string_view text, int n);
// Whitespace tokens, each with its maximal leading and trailing
// non-alphanumeric runs split off as separate tokens.
std::vector<std::string> word_tokens(std::string_view text);
NgramCounts word_ngrams(std::string_view text, int n);

struct OrderStats {
  std::uint64_t hyp_total = 0;
  std::uint64_t ref_total = 0;
  std::uint64_t matches = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

struct ChrFBreakdown {
  std::vector<OrderStats> char_orders;  // orders 1..max_char_n
  std::vector<OrderStats> word_orders;  // orders 1..max_word_n
  double score = 0.0;                   // in [0,1]
};

// Per order: P = matches/|hyp|, R = matches/|ref| (0 on a zero denominator),
// F = (1+b^2)PR/(b^2 P + R) (0 when P = R = 0). The score is the mean F over
// the orders where hypothesis or reference has at least one n-gram, and 0
// when no order has any.
ChrFBreakdown chrf_pp(std::string_view hypothesis, std::string_view reference,
                      const MetricConfig& cfg = {});

// Applies the P/R/F/averaging rule to already-counted order statistics.
double chrf_from_counts(std::vector<OrderStats>& char_orders, std::vector<OrderStats>& word_orders,
                        double beta);

double corpus_chrf_pp(const std::vector<std::pair<std::string, std::string>>& pairs,
                      const MetricConfig& cfg = {});

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-tailed
  std::size_t n = 0;
  std::size_t dof = 0;
};

enum class MetricsErrc { empty_input, length_mismatch, too_few_pairs, zero_variance };

class MetricsError : public std::runtime_error {
 public:
  MetricsError(MetricsErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  MetricsErrc code() const noexcept { return code_; }

 private:
  MetricsErrc code_;
};

// Regularized incomplete beta I_x(a, b), continued fraction to 1e-12.
double regularized_incomplete_beta(double x, double a, double b);
// Two-tailed P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_tailed(double t, double dof);

// d = a - b; t = mean(d) / (sd(d) / sqrt(n)) with the n-1 sample deviation.
// Differences equal to within 1e-12 of their magnitude count as zero variance.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Mean output_tokens per (rung, corpus label); groups without results are absent.
std::map<std::pair<std::uint64_t, std::string>, double> output_length_stats(
    const std::vector<GenerationResult>& results);

}  // namespace manyshot
