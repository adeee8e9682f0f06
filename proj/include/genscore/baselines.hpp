#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genscore/types.hpp"

namespace genscore {

// Whitespace tokens with ASCII punctuation split off as separate tokens.
std::vector<std::string> baseline_tokenize(std::string_view text);

using Tokens = std::vector<std::string>;

// Multiset of order-n n-grams; total = max(0, |tokens| - n + 1).
struct NgramProfile {
  std::size_t order = 1;
  std::map<std::vector<std::string>, std::size_t> counts;
  std::size_t total = 0;

  static NgramProfile build(std::span<const std::string> tokens, std::size_t order);
};

struct BleuStats {
  std::vector<std::size_t> matches;  // clipped, per order
  std::vector<std::size_t> totals;   // hypothesis n-grams, per order
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;        // closest reference length

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(std::span<const std::string> hypothesis, std::span<const Tokens> references,
                     std::size_t max_order = 4);

enum class BleuSmoothing { kNone, kAddOne };

// Geometric mean of clipped precisions times the brevity penalty. kAddOne
// replaces a zero-match precision p_n (n > 1) with 1 / (total_n + 1).
double bleu_from_stats(const BleuStats& stats, BleuSmoothing smoothing);

double sentence_bleu(std::string_view hypothesis, std::span<const std::string> references,
                     std::size_t max_order = 4, BleuSmoothing smoothing = BleuSmoothing::kAddOne);

// Unsmoothed, over aggregate counts.
double corpus_bleu(std::span<const std::pair<std::string, std::vector<std::string>>> segments,
                   std::size_t max_order = 4);

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PrfScore rouge_n(std::string_view hypothesis, std::string_view reference, std::size_t n);
PrfScore rouge_l(std::string_view hypothesis, std::string_view reference);
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Best F1 over references.
PrfScore rouge_n_multi(std::string_view hypothesis, std::span<const std::string> references,
                       std::size_t n);
PrfScore rouge_l_multi(std::string_view hypothesis, std::span<const std::string> references);

// Mean over orders 1..char_order of F_beta on character n-grams (whitespace
// removed). Orders where neither side has an n-gram are skipped.
double chrf(std::string_view hypothesis, std::string_view reference, std::size_t char_order = 6,
            double beta = 2.0);

enum class BaselineMetric { kBleu, kRouge1, kRouge2, kRougeL, kChrf };

std::string_view baseline_name(BaselineMetric m);
std::optional<BaselineMetric> parse_baseline(std::string_view name);

// Segment score against all references (max over references).
double baseline_score(BaselineMetric metric, std::string_view hypothesis,
                      std::span<const std::string> references);

// Same table shape as the model-based scorer.
MetricScoreTable score_corpus_baseline(const Corpus& corpus, BaselineMetric metric,
                                       std::size_t workers = 1, bool skip_errors = false);

}  // namespace genscore
